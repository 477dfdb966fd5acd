#include "cakesim/scenario.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "cakesim/nat.hpp"

namespace cakesim {

ScenarioError::ScenarioError(std::vector<ParseIssue> issues)
    : std::runtime_error(format(issues)), issues_(std::move(issues)) {}

std::string ScenarioError::format(const std::vector<ParseIssue>& issues) {
    std::ostringstream os;
    os << "scenario error";
    for (const auto& i : issues) {
        os << "\n  line " << i.line;
        if (!i.field.empty()) os << " (" << i.field << ")";
        os << ": " << i.message;
    }
    return os.str();
}

const HostSpec* ScenarioConfig::find_host(const std::string& name) const {
    for (const auto& h : hosts)
        if (h.name == name) return &h;
    return nullptr;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

uint64_t parse_u64(const std::string& s) {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters in: " + s);
    return v;
}

} // namespace

uint64_t parse_rate(const std::string& s) {
    std::string num, unit;
    for (char c : s) {
        if (std::isdigit(static_cast<unsigned char>(c)) && unit.empty())
            num.push_back(c);
        else
            unit.push_back(char(std::tolower(static_cast<unsigned char>(c))));
    }
    if (num.empty()) throw std::invalid_argument("bad rate: " + s);
    uint64_t v = parse_u64(num);
    if (unit.empty() || unit == "bit") return v;
    if (unit == "kbit") return v * 1'000;
    if (unit == "mbit") return v * 1'000'000;
    if (unit == "gbit") return v * 1'000'000'000;
    throw std::invalid_argument("bad rate unit: " + s);
}

std::string format_rate(uint64_t bps) {
    char buf[32];
    if (bps >= 1'000'000'000 && bps % 1'000'000'000 == 0)
        std::snprintf(buf, sizeof(buf), "%lluGbit", (unsigned long long)(bps / 1'000'000'000));
    else if (bps >= 1'000'000 && bps % 1'000'000 == 0)
        std::snprintf(buf, sizeof(buf), "%lluMbit", (unsigned long long)(bps / 1'000'000));
    else if (bps >= 1'000 && bps % 1'000 == 0)
        std::snprintf(buf, sizeof(buf), "%lluKbit", (unsigned long long)(bps / 1'000));
    else
        std::snprintf(buf, sizeof(buf), "%llubit", (unsigned long long)bps);
    return buf;
}

uint64_t parse_size(const std::string& s) {
    std::string num, unit;
    for (char c : s) {
        if (std::isdigit(static_cast<unsigned char>(c)) && unit.empty())
            num.push_back(c);
        else
            unit.push_back(char(std::tolower(static_cast<unsigned char>(c))));
    }
    if (num.empty()) throw std::invalid_argument("bad size: " + s);
    uint64_t v = parse_u64(num);
    if (unit.empty() || unit == "b") return v;
    if (unit == "kb") return v * 1024;
    if (unit == "mb") return v * 1024 * 1024;
    throw std::invalid_argument("bad size unit: " + s);
}

SimTime parse_time(const std::string& s) {
    std::string num, unit;
    for (char c : s) {
        if ((std::isdigit(static_cast<unsigned char>(c)) || c == '.') && unit.empty())
            num.push_back(c);
        else
            unit.push_back(char(std::tolower(static_cast<unsigned char>(c))));
    }
    if (num.empty()) throw std::invalid_argument("bad time: " + s);
    if (num.find('.') != std::string::npos) {
        double v = std::stod(num);
        if (unit == "s") return SimTime::ns(int64_t(v * 1e9));
        if (unit == "ms") return SimTime::ns(int64_t(v * 1e6));
        if (unit == "us") return SimTime::ns(int64_t(v * 1e3));
        throw std::invalid_argument("bad time unit: " + s);
    }
    uint64_t v = parse_u64(num);
    if (unit == "ns") return SimTime::ns(int64_t(v));
    if (unit == "us") return SimTime::us(int64_t(v));
    if (unit == "ms") return SimTime::ms(int64_t(v));
    if (unit == "s" || unit.empty()) return SimTime::sec(int64_t(v));
    throw std::invalid_argument("bad time unit: " + s);
}

std::string format_time(SimTime t) {
    const int64_t ns = t.count_ns();
    char buf[32];
    if (ns % 1'000'000'000 == 0)
        std::snprintf(buf, sizeof(buf), "%llds", (long long)(ns / 1'000'000'000));
    else if (ns % 1'000'000 == 0)
        std::snprintf(buf, sizeof(buf), "%lldms", (long long)(ns / 1'000'000));
    else if (ns % 1'000 == 0)
        std::snprintf(buf, sizeof(buf), "%lldus", (long long)(ns / 1'000));
    else
        std::snprintf(buf, sizeof(buf), "%lldns", (long long)ns);
    return buf;
}

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig cfg;
    std::vector<ParseIssue> issues;

    std::string section, section_arg;
    HostSpec* host = nullptr;
    FlowSpec* flow = nullptr;

    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({lineno, "", "unterminated section header"});
                continue;
            }
            auto parts = split_ws(line.substr(1, line.size() - 2));
            if (parts.empty()) {
                issues.push_back({lineno, "", "empty section header"});
                continue;
            }
            section = parts[0];
            section_arg = parts.size() > 1 ? parts[1] : "";
            host = nullptr;
            flow = nullptr;
            if (section == "host") {
                if (section_arg.empty()) {
                    issues.push_back({lineno, "host", "host section needs a name"});
                } else {
                    cfg.hosts.push_back(HostSpec{section_arg, {}, true});
                    host = &cfg.hosts.back();
                }
            } else if (section == "flow") {
                if (section_arg.empty()) {
                    issues.push_back({lineno, "flow", "flow section needs a name"});
                } else {
                    cfg.flows.push_back(FlowSpec{});
                    flow = &cfg.flows.back();
                    flow->name = section_arg;
                }
            } else if (section != "general" && section != "link") {
                issues.push_back({lineno, section, "unknown section"});
                section.clear();
            }
            continue;
        }

        const size_t sp = line.find_first_of(" \t");
        const std::string key = sp == std::string::npos ? line : line.substr(0, sp);
        const std::string value = sp == std::string::npos ? "" : trim(line.substr(sp));
        if (value.empty()) {
            issues.push_back({lineno, key, "missing value"});
            continue;
        }

        try {
            if (section == "general") {
                if (key == "duration") cfg.duration = parse_time(value);
                else if (key == "seed") cfg.seed = parse_u64(value);
                else if (key == "metrics-interval") cfg.metrics_interval = parse_time(value);
                else throw std::invalid_argument("unknown key in [general]");
            } else if (section == "link") {
                if (key == "rate-up") cfg.link.rate_up_bps = parse_rate(value);
                else if (key == "rate-down") cfg.link.rate_down_bps = parse_rate(value);
                else if (key == "delay") cfg.link.delay = parse_time(value);
                else if (key == "qdisc-up") cfg.link.qdisc_up = value;
                else if (key == "qdisc-down") cfg.link.qdisc_down = value;
                else if (key == "nat") cfg.link.nat = (value == "on");
                else throw std::invalid_argument("unknown key in [link]");
            } else if (section == "host" && host) {
                if (key == "ip") host->ip = parse_ip(value);
                else if (key == "side") {
                    if (value != "lan" && value != "wan")
                        throw std::invalid_argument("side must be lan or wan");
                    host->lan = (value == "lan");
                } else throw std::invalid_argument("unknown key in [host]");
            } else if (section == "flow" && flow) {
                if (key == "type") {
                    if (value == "tcp") flow->type = FlowType::Tcp;
                    else if (value == "fixed") flow->type = FlowType::FixedRate;
                    else if (value == "ping") flow->type = FlowType::Ping;
                    else throw std::invalid_argument("unknown flow type: " + value);
                } else if (key == "src") flow->src = value;
                else if (key == "dst") flow->dst = value;
                else if (key == "start") flow->start = parse_time(value);
                else if (key == "duration") flow->duration = parse_time(value);
                else if (key == "dscp") flow->dscp = parse_dscp(value);
                else if (key == "mss") flow->mss = uint32_t(parse_u64(value));
                else if (key == "rate") flow->rate_bps = parse_rate(value);
                else if (key == "packet-size") flow->packet_size = uint32_t(parse_u64(value));
                else if (key == "interval") flow->interval = parse_time(value);
                else if (key == "size") flow->size = uint32_t(parse_u64(value));
                else throw std::invalid_argument("unknown key in [flow]");
            } else {
                throw std::invalid_argument("key outside any section");
            }
        } catch (const std::exception& e) {
            issues.push_back({lineno, key, e.what()});
        }
    }

    if (!issues.empty()) throw ScenarioError(std::move(issues));
    validate_scenario(cfg);
    return cfg;
}

void validate_scenario(const ScenarioConfig& cfg) {
    std::vector<ParseIssue> issues;
    auto bad = [&](const std::string& field, const std::string& msg) {
        issues.push_back({0, field, msg});
    };

    if (cfg.duration <= SimTime())
        bad("duration", "must be positive");
    if (cfg.metrics_interval <= SimTime())
        bad("metrics-interval", "must be positive");
    if (cfg.link.rate_up_bps == 0 || cfg.link.rate_down_bps == 0)
        bad("link", "link rates must be positive");

    for (const auto& q : {std::make_pair("qdisc-up", cfg.link.qdisc_up),
                          std::make_pair("qdisc-down", cfg.link.qdisc_down)}) {
        try {
            (void)parse_qdisc_spec(q.second);
        } catch (const std::exception& e) {
            bad(q.first, e.what());
        }
    }

    std::map<std::string, int> host_names;
    for (const auto& h : cfg.hosts) {
        if (++host_names[h.name] > 1) bad("host " + h.name, "duplicate host name");
        if (h.ip.len == 0) bad("host " + h.name, "missing ip");
    }
    std::map<std::string, int> flow_names;
    for (const auto& f : cfg.flows) {
        if (++flow_names[f.name] > 1) bad("flow " + f.name, "duplicate flow name");
        const HostSpec* src = cfg.find_host(f.src);
        const HostSpec* dst = cfg.find_host(f.dst);
        if (f.src.empty() || !src)
            bad("flow " + f.name, "undefined src host reference: " + f.src);
        if (f.dst.empty() || !dst)
            bad("flow " + f.name, "undefined dst host reference: " + f.dst);
        if (src && dst && src->lan == dst->lan)
            bad("flow " + f.name, "src and dst must be on opposite sides of the link");
        if (f.type == FlowType::FixedRate && f.rate_bps == 0)
            bad("flow " + f.name, "fixed-rate flow needs a rate");
        if (f.type == FlowType::FixedRate && f.packet_size == 0)
            bad("flow " + f.name, "fixed-rate flow needs a packet size");
        if (f.type == FlowType::Ping && f.interval <= SimTime())
            bad("flow " + f.name, "ping interval must be positive");
        if (f.type == FlowType::Tcp && f.mss == 0)
            bad("flow " + f.name, "tcp mss must be positive");
        if (f.start < SimTime()) bad("flow " + f.name, "start must be >= 0");
    }

    if (!issues.empty()) throw ScenarioError(std::move(issues));
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "[general]\n";
    os << "duration " << format_time(cfg.duration) << "\n";
    os << "seed " << cfg.seed << "\n";
    os << "metrics-interval " << format_time(cfg.metrics_interval) << "\n";
    os << "\n[link]\n";
    os << "rate-up " << format_rate(cfg.link.rate_up_bps) << "\n";
    os << "rate-down " << format_rate(cfg.link.rate_down_bps) << "\n";
    os << "delay " << format_time(cfg.link.delay) << "\n";
    os << "qdisc-up " << cfg.link.qdisc_up << "\n";
    os << "qdisc-down " << cfg.link.qdisc_down << "\n";
    os << "nat " << (cfg.link.nat ? "on" : "off") << "\n";
    for (const auto& h : cfg.hosts) {
        os << "\n[host " << h.name << "]\n";
        os << "ip " << h.ip.to_string() << "\n";
        os << "side " << (h.lan ? "lan" : "wan") << "\n";
    }
    for (const auto& f : cfg.flows) {
        os << "\n[flow " << f.name << "]\n";
        switch (f.type) {
            case FlowType::Tcp: os << "type tcp\n"; break;
            case FlowType::FixedRate: os << "type fixed\n"; break;
            case FlowType::Ping: os << "type ping\n"; break;
        }
        os << "src " << f.src << "\n";
        os << "dst " << f.dst << "\n";
        if (f.start != SimTime()) os << "start " << format_time(f.start) << "\n";
        if (f.duration != SimTime()) os << "duration " << format_time(f.duration) << "\n";
        os << "dscp " << dscp_name(f.dscp) << "\n";
        if (f.type == FlowType::Tcp) os << "mss " << f.mss << "\n";
        if (f.type == FlowType::FixedRate) {
            os << "rate " << format_rate(f.rate_bps) << "\n";
            os << "packet-size " << f.packet_size << "\n";
        }
        if (f.type == FlowType::Ping) {
            os << "interval " << format_time(f.interval) << "\n";
            os << "size " << f.size << "\n";
        }
    }
    return os.str();
}

QdiscSpec parse_qdisc_spec(const std::string& text) {
    QdiscSpec spec;
    spec.text = text;
    auto toks = split_ws(text);
    if (toks.empty()) throw std::invalid_argument("empty qdisc spec");

    size_t i = 1;
    auto next_value = [&](const std::string& key) -> std::string {
        if (i >= toks.size())
            throw std::invalid_argument("qdisc key '" + key + "' needs a value");
        return toks[i++];
    };

    if (toks[0] == "fifo") {
        spec.kind = QdiscSpec::Kind::Fifo;
        while (i < toks.size()) {
            std::string t = toks[i++];
            if (t == "limit") spec.fifo_limit = parse_size(next_value(t));
            else throw std::invalid_argument("unknown fifo option: " + t);
        }
        return spec;
    }

    if (toks[0] == "fq_codel") {
        spec.kind = QdiscSpec::Kind::FqCodel;
        spec.cake = CakeConfig::fq_codel_preset();
        while (i < toks.size()) {
            std::string t = toks[i++];
            if (t == "target") spec.cake.target = parse_time(next_value(t));
            else if (t == "interval") spec.cake.interval = parse_time(next_value(t));
            else if (t == "quantum") spec.cake.quantum = uint32_t(parse_u64(next_value(t)));
            else if (t == "memlimit") spec.cake.memlimit = parse_size(next_value(t));
            else throw std::invalid_argument("unknown fq_codel option: " + t);
        }
        return spec;
    }

    if (toks[0] != "cake")
        throw std::invalid_argument("unknown qdisc kind: " + toks[0]);

    spec.kind = QdiscSpec::Kind::Cake;
    CakeConfig& c = spec.cake;
    while (i < toks.size()) {
        std::string t = toks[i++];
        if (t == "bandwidth") {
            std::string v = next_value(t);
            c.shaper.rate_bps = (v == "unlimited") ? 0 : parse_rate(v);
        } else if (t == "besteffort" || t == "diffserv3" || t == "diffserv4" ||
                   t == "diffserv8" || t == "diffserv8-strict") {
            c.diffserv = parse_diffserv_mode(t);
        } else if (t == "flows") {
            c.key_mode = FlowKeyMode::FiveTuple;
            c.isolation = IsolationMode::FlowOnly;
        } else if (t == "hosts") {
            c.key_mode = FlowKeyMode::HostPair;
            c.isolation = IsolationMode::Triple;
        } else if (t == "flowblind") {
            c.key_mode = FlowKeyMode::Blind;
            c.isolation = IsolationMode::FlowOnly;
        } else if (t == "srchost") {
            c.key_mode = FlowKeyMode::FiveTuple;
            c.isolation = IsolationMode::SrcHost;
        } else if (t == "dsthost") {
            c.key_mode = FlowKeyMode::FiveTuple;
            c.isolation = IsolationMode::DstHost;
        } else if (t == "triple-isolate") {
            c.key_mode = FlowKeyMode::FiveTuple;
            c.isolation = IsolationMode::Triple;
        } else if (t == "nat") {
            c.nat_aware = (next_value(t) == "on");
        } else if (t == "ack-filter") {
            c.ack_filter = parse_ack_filter_mode(next_value(t));
        } else if (t == "overhead") {
            c.shaper.overhead = int32_t(std::stol(next_value(t)));
        } else if (t == "atm") {
            c.shaper.framing = Framing::Atm;
        } else if (t == "ptm") {
            c.shaper.framing = Framing::Ptm;
        } else if (t == "noatm") {
            c.shaper.framing = Framing::None;
        } else if (t == "mpu") {
            c.shaper.mpu = uint32_t(parse_u64(next_value(t)));
        } else if (t == "split-gso") {
            std::string v = next_value(t);
            if (v == "on") c.shaper.split_gso = SplitGso::On;
            else if (v == "off") c.shaper.split_gso = SplitGso::Off;
            else if (v == "auto") c.shaper.split_gso = SplitGso::Auto;
            else throw std::invalid_argument("split-gso must be on, off or auto");
        } else if (t == "quantum") {
            c.quantum = uint32_t(parse_u64(next_value(t)));
        } else if (t == "memlimit") {
            c.memlimit = parse_size(next_value(t));
        } else if (t == "target") {
            c.target = parse_time(next_value(t));
        } else if (t == "interval") {
            c.interval = parse_time(next_value(t));
        } else {
            throw std::invalid_argument("unknown cake option: " + t);
        }
    }
    return spec;
}

std::unique_ptr<Qdisc> make_qdisc(const QdiscSpec& spec, uint32_t salt,
                                  const NatTable* nat) {
    switch (spec.kind) {
        case QdiscSpec::Kind::Fifo:
            return std::make_unique<FifoQdisc>(spec.fifo_limit);
        case QdiscSpec::Kind::FqCodel:
        case QdiscSpec::Kind::Cake: {
            CakeConfig cfg = spec.cake;
            cfg.salt = salt;
            return std::make_unique<CakeQdisc>(cfg, nat);
        }
    }
    return nullptr;
}

} // namespace cakesim
