#include "cakesim/scenario.hpp"

#include <map>
#include <sstream>

namespace cakesim {

namespace {

std::string common_header(const std::string& qdisc_up, const std::string& qdisc_down,
                          const std::string& rate_up, const std::string& rate_down) {
    std::ostringstream os;
    os << "[general]\n"
          "duration 60s\n"
          "seed 1\n"
          "metrics-interval 1s\n"
          "\n[link]\n";
    os << "rate-up " << rate_up << "\n";
    os << "rate-down " << rate_down << "\n";
    os << "delay 25ms\n";
    os << "qdisc-up " << qdisc_up << "\n";
    os << "qdisc-down " << qdisc_down << "\n";
    os << "nat off\n";
    return os.str();
}

std::string tcp_flow(const std::string& name, const std::string& src,
                     const std::string& dst, const std::string& dscp,
                     const std::string& start = "") {
    std::ostringstream os;
    os << "\n[flow " << name << "]\ntype tcp\nsrc " << src << "\ndst " << dst
       << "\ndscp " << dscp << "\n";
    if (!start.empty()) os << "start " << start << "\n";
    return os.str();
}

std::string ping_flow(const std::string& name, const std::string& src,
                      const std::string& dst, const std::string& dscp) {
    std::ostringstream os;
    os << "\n[flow " << name << "]\ntype ping\nsrc " << src << "\ndst " << dst
       << "\ndscp " << dscp << "\ninterval 100ms\nsize 64\n";
    return os.str();
}

std::string host(const std::string& name, const std::string& ip,
                 const std::string& side) {
    return "\n[host " + name + "]\nip " + ip + "\nside " + side + "\n";
}

std::string build_rrul() {
    std::string s = "# Real-Time Response Under Load: four TCP flows each way plus\n"
                    "# three latency probes on a shaped 10 Mbps path.\n";
    s += common_header("cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "100Mbit", "100Mbit");
    s += host("client", "10.0.0.2", "lan");
    s += host("server", "198.51.100.10", "wan");
    const char* marks[4] = {"CS1", "CS0", "CS5", "EF"};
    for (int i = 0; i < 4; ++i)
        s += tcp_flow("up-" + std::string(marks[i]), "client", "server", marks[i]);
    for (int i = 0; i < 4; ++i)
        s += tcp_flow("down-" + std::string(marks[i]), "server", "client", marks[i]);
    s += ping_flow("ping-CS0", "client", "server", "CS0");
    s += ping_flow("ping-EF", "client", "server", "EF");
    s += ping_flow("ping-CS1", "client", "server", "CS1");
    return s;
}

std::string build_host_isolation() {
    std::string s = "# Six upload flows from two source hosts to four destination\n"
                    "# hosts: A->a, A->b, A->c, A->c, B->c, B->d.\n";
    s += common_header("cake bandwidth 10Mbit besteffort triple-isolate",
                       "cake bandwidth 10Mbit besteffort triple-isolate",
                       "100Mbit", "100Mbit");
    s += host("A", "10.0.0.2", "lan");
    s += host("B", "10.0.0.3", "lan");
    s += host("a", "198.51.100.1", "wan");
    s += host("b", "198.51.100.2", "wan");
    s += host("c", "198.51.100.3", "wan");
    s += host("d", "198.51.100.4", "wan");
    s += tcp_flow("A-a", "A", "a", "CS0");
    s += tcp_flow("A-b", "A", "b", "CS0");
    s += tcp_flow("A-c1", "A", "c", "CS0");
    s += tcp_flow("A-c2", "A", "c", "CS0");
    s += tcp_flow("B-c", "B", "c", "CS0");
    s += tcp_flow("B-d", "B", "d", "CS0");
    return s;
}

std::string build_diffserv_rrul() {
    std::string s = "# Four upload TCP flows marked CS1, CS0, CS5 and EF competing\n"
                    "# on a shaped 10 Mbps uplink.\n";
    s += common_header("cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "100Mbit", "100Mbit");
    s += host("client", "10.0.0.2", "lan");
    s += host("server", "198.51.100.10", "wan");
    const char* marks[4] = {"CS1", "CS0", "CS5", "EF"};
    for (int i = 0; i < 4; ++i)
        s += tcp_flow("up-" + std::string(marks[i]), "client", "server", marks[i]);
    s += ping_flow("ping-CS0", "client", "server", "CS0");
    return s;
}

std::string build_diffserv_voip() {
    std::string s = "# A 2 Mbps EF fixed-rate flow against 32 bulk TCP flows that\n"
                    "# start after five seconds, on a shaped 10 Mbps uplink.\n";
    s += common_header("cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "cake bandwidth 10Mbit diffserv3 triple-isolate",
                       "100Mbit", "100Mbit");
    s += host("client", "10.0.0.2", "lan");
    s += host("server", "198.51.100.10", "wan");
    s += "\n[flow voip]\ntype fixed\nsrc client\ndst server\ndscp EF\n"
         "rate 2Mbit\npacket-size 1250\n";
    for (int i = 1; i <= 32; ++i) {
        std::ostringstream name;
        name << "bulk" << (i < 10 ? "0" : "") << i;
        s += tcp_flow(name.str(), "client", "server", "CS0", "5s");
    }
    return s;
}

std::string build_ack_asym() {
    std::string s = "# Highly asymmetric 30/1 Mbps link with four TCP transfers in\n"
                    "# each direction and one latency probe.\n";
    s += common_header("cake bandwidth 1Mbit besteffort ack-filter off",
                       "cake bandwidth 30Mbit besteffort",
                       "100Mbit", "100Mbit");
    s += host("client", "10.0.0.2", "lan");
    s += host("server", "198.51.100.10", "wan");
    for (int i = 1; i <= 4; ++i)
        s += tcp_flow("up" + std::to_string(i), "client", "server", "CS0");
    for (int i = 1; i <= 4; ++i)
        s += tcp_flow("down" + std::to_string(i), "server", "client", "CS0");
    s += ping_flow("ping", "client", "server", "CS0");
    return s;
}

const std::map<std::string, std::pair<std::string, std::string>>& preset_map() {
    static const std::map<std::string, std::pair<std::string, std::string>> presets = {
        {"rrul",
         {build_rrul(), "bidirectional load with latency probes on 10 Mbps"}},
        {"host-isolation",
         {build_host_isolation(), "six flows from two hosts to four hosts"}},
        {"diffserv-rrul",
         {build_diffserv_rrul(), "TCP flows on four DiffServ code points"}},
        {"diffserv-voip",
         {build_diffserv_voip(), "2 Mbps EF flow against 32 bulk TCP flows"}},
        {"ack-asym",
         {build_ack_asym(), "30/1 Mbps asymmetric link, ACK filter testbed"}},
    };
    return presets;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : preset_map()) names.push_back(k);
    return names;
}

const std::string* preset_text(const std::string& name) {
    auto it = preset_map().find(name);
    if (it == preset_map().end()) return nullptr;
    return &it->second.first;
}

std::string preset_description(const std::string& name) {
    auto it = preset_map().find(name);
    if (it == preset_map().end()) return "";
    return it->second.second;
}

} // namespace cakesim
