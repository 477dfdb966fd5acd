#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cakesim/packet.hpp"
#include "cakesim/qdisc.hpp"
#include "cakesim/time.hpp"

namespace cakesim {

class NatTable;

// One parse problem with its location.
struct ParseIssue {
    int line = 0;
    std::string field;
    std::string message;
};

class ScenarioError : public std::runtime_error {
  public:
    explicit ScenarioError(std::vector<ParseIssue> issues);
    const std::vector<ParseIssue>& issues() const { return issues_; }

  private:
    static std::string format(const std::vector<ParseIssue>& issues);
    std::vector<ParseIssue> issues_;
};

struct HostSpec {
    std::string name;
    IpAddr ip;
    bool lan = true;
    auto operator<=>(const HostSpec&) const = default;
};

enum class FlowType : uint8_t { Tcp, FixedRate, Ping };

struct FlowSpec {
    std::string name;
    FlowType type = FlowType::Tcp;
    std::string src;
    std::string dst;
    SimTime start;
    SimTime duration; // 0 = until the end of the run
    uint8_t dscp = 0;
    uint32_t mss = 1448;                   // tcp: payload bytes per segment
    uint64_t rate_bps = 0;                 // fixed-rate: payload rate
    uint32_t packet_size = 1250;           // fixed-rate: payload bytes
    SimTime interval = SimTime::ms(100);   // ping
    uint32_t size = 64;                    // ping: on-wire frame bytes
    auto operator<=>(const FlowSpec&) const = default;
};

struct LinkSpec {
    uint64_t rate_up_bps = 100'000'000;
    uint64_t rate_down_bps = 100'000'000;
    SimTime delay = SimTime::ms(25); // one-way propagation
    std::string qdisc_up = "cake bandwidth 10Mbit";
    std::string qdisc_down = "cake bandwidth 10Mbit";
    bool nat = false;
    auto operator<=>(const LinkSpec&) const = default;
};

struct ScenarioConfig {
    SimTime duration = SimTime::sec(60);
    uint64_t seed = 1;
    SimTime metrics_interval = SimTime::sec(1);
    LinkSpec link;
    std::vector<HostSpec> hosts;
    std::vector<FlowSpec> flows;

    auto operator<=>(const ScenarioConfig&) const = default;

    const HostSpec* find_host(const std::string& name) const;
};

// Line-oriented sectioned text format; collects every problem it finds
// and throws a ScenarioError naming line and field for each.
ScenarioConfig parse_scenario(const std::string& text);
std::string serialize_scenario(const ScenarioConfig& cfg);

// Semantic validation (dangling endpoint references, bad durations).
void validate_scenario(const ScenarioConfig& cfg);

// "10Mbit", "1Gbit", "250Kbit", "9600bit" or plain bits per second.
uint64_t parse_rate(const std::string& s);
// "4MB", "64KB", "1514" (bytes).
uint64_t parse_size(const std::string& s);
// "50ms", "1s", "100us", "5000ns".
SimTime parse_time(const std::string& s);

std::string format_rate(uint64_t bps);
std::string format_time(SimTime t);

// Qdisc spec strings: "cake bandwidth 10Mbit diffserv3 triple-isolate
// ack-filter on overhead 8 atm ...", "fq_codel", "fifo limit 1MB".
struct QdiscSpec {
    enum class Kind : uint8_t { Cake, FqCodel, Fifo } kind = Kind::Cake;
    CakeConfig cake;
    uint64_t fifo_limit = 1'000'000;
    std::string text;
};

QdiscSpec parse_qdisc_spec(const std::string& text);
std::unique_ptr<Qdisc> make_qdisc(const QdiscSpec& spec, uint32_t salt,
                                  const NatTable* nat);

// Built-in experiment presets, stored as scenario text.
std::vector<std::string> preset_names();
const std::string* preset_text(const std::string& name);
std::string preset_description(const std::string& name);

} // namespace cakesim
