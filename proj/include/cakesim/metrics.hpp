#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cakesim/packet.hpp"
#include "cakesim/qdisc.hpp"
#include "cakesim/time.hpp"

namespace cakesim {

struct FlowSample {
    double t = 0; // interval end, seconds
    double goodput_bps = 0;
    double rtt_ms = -1; // -1 = no sample this interval
    uint64_t drops = 0;
    uint64_t filtered_acks = 0;
};

struct LatencySample {
    double t = 0;
    double ms = 0;
};

struct FlowLog {
    std::string name;
    Direction direction = Direction::Up;
    std::string type;
    uint8_t dscp = 0;
    uint64_t total_rx_bytes = 0; // delivered payload
    uint64_t total_tx_bytes = 0;
    uint64_t total_drops = 0;
    uint64_t total_filtered = 0;
    std::vector<FlowSample> samples;
    // Raw delay samples: RTT for probes, one-way for fixed-rate flows.
    std::vector<LatencySample> latency;
};

struct MetricsLog {
    std::string schema = "cakesim-metrics/1";
    uint64_t seed = 0;
    double duration_s = 0;
    double metrics_interval_s = 0;
    std::string scenario_echo;
    std::vector<FlowLog> flows;
    QdiscStats qdisc_up;
    QdiscStats qdisc_down;
};

struct FlowSummary {
    std::string name;
    std::string direction;
    double mean_goodput_bps = 0;   // over the steady-state window
    double median_goodput_bps = 0;
    double latency_p50_ms = -1;
    double latency_p95_ms = -1;
    double latency_p99_ms = -1;
    uint64_t drops = 0;
    uint64_t filtered_acks = 0;
};

struct SummaryStats {
    double window_start_s = 0;
    double window_end_s = 0;
    std::vector<FlowSummary> flows;
    double up_goodput_bps = 0; // aggregate means over the window
    double down_goodput_bps = 0;
};

// Per-flow steady-state statistics; the window excludes `margin` at both
// ends of the run. Throws std::invalid_argument when the run is too
// short for the window (unless the log has no flows at all).
SummaryStats summarize(const MetricsLog& log, SimTime margin = SimTime::sec(5));

std::string metrics_to_json(const MetricsLog& log);
MetricsLog metrics_from_json(const std::string& text);
std::string flows_to_csv(const MetricsLog& log);
std::string summary_to_text(const SummaryStats& s);

// Writes metrics.json and flows.csv into dir (created if needed),
// atomically: temp file plus rename, so failures leave no partial files.
void write_metrics_files(const MetricsLog& log, const std::string& dir);

} // namespace cakesim
