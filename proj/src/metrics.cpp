#include "cakesim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cakesim {

namespace {

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return -1;
    std::sort(v.begin(), v.end());
    const size_t idx = std::min(v.size() - 1, size_t(std::max(0.0, q * double(v.size()) - 1e-9)));
    return v[idx];
}

double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

nlohmann::ordered_json qdisc_json(const QdiscStats& s) {
    nlohmann::ordered_json j;
    j["enq_pkts"] = s.enq_pkts;
    j["enq_bytes"] = s.enq_bytes;
    j["tx_pkts"] = s.tx_pkts;
    j["tx_bytes"] = s.tx_bytes;
    nlohmann::ordered_json drops;
    for (int c = 0; c < 4; ++c) {
        nlohmann::ordered_json d;
        d["pkts"] = s.drop_pkts[c];
        d["bytes"] = s.drop_bytes[c];
        drops[drop_cause_name(DropCause(c))] = d;
    }
    j["drops"] = drops;
    j["filtered_acks"] = s.filtered_acks();
    j["backlog_pkts"] = s.backlog_pkts;
    j["backlog_bytes"] = s.backlog_bytes;
    j["collisions"] = s.collisions;
    j["adj_clamped"] = s.adj_clamped;
    j["tier_tx_bytes"] = s.tier_tx_bytes;
    j["tier_tx_pkts"] = s.tier_tx_pkts;
    return j;
}

void qdisc_from_json(const nlohmann::json& j, QdiscStats& s) {
    s.enq_pkts = j.at("enq_pkts");
    s.enq_bytes = j.at("enq_bytes");
    s.tx_pkts = j.at("tx_pkts");
    s.tx_bytes = j.at("tx_bytes");
    for (int c = 0; c < 4; ++c) {
        const auto& d = j.at("drops").at(drop_cause_name(DropCause(c)));
        s.drop_pkts[c] = d.at("pkts");
        s.drop_bytes[c] = d.at("bytes");
    }
    s.backlog_pkts = j.at("backlog_pkts");
    s.backlog_bytes = j.at("backlog_bytes");
    s.collisions = j.at("collisions");
    s.adj_clamped = j.at("adj_clamped");
    s.tier_tx_bytes = j.at("tier_tx_bytes").get<std::vector<uint64_t>>();
    s.tier_tx_pkts = j.at("tier_tx_pkts").get<std::vector<uint64_t>>();
}

} // namespace

SummaryStats summarize(const MetricsLog& log, SimTime margin) {
    SummaryStats out;
    if (log.flows.empty()) return out;

    const double lo = margin.to_seconds();
    const double hi = log.duration_s - margin.to_seconds();
    if (hi <= lo)
        throw std::invalid_argument("steady-state window longer than the run");
    out.window_start_s = lo;
    out.window_end_s = hi;

    for (const auto& f : log.flows) {
        FlowSummary s;
        s.name = f.name;
        s.direction = direction_name(f.direction);
        std::vector<double> goodputs;
        for (const auto& smp : f.samples)
            if (smp.t > lo && smp.t <= hi) goodputs.push_back(smp.goodput_bps);
        if (!goodputs.empty()) {
            double sum = 0;
            for (double g : goodputs) sum += g;
            s.mean_goodput_bps = sum / double(goodputs.size());
            s.median_goodput_bps = median(goodputs);
        }
        std::vector<double> lat;
        for (const auto& l : f.latency)
            if (l.t > lo && l.t <= hi) lat.push_back(l.ms);
        if (!lat.empty()) {
            s.latency_p50_ms = percentile(lat, 0.50);
            s.latency_p95_ms = percentile(lat, 0.95);
            s.latency_p99_ms = percentile(lat, 0.99);
        }
        s.drops = f.total_drops;
        s.filtered_acks = f.total_filtered;
        if (f.direction == Direction::Up)
            out.up_goodput_bps += s.mean_goodput_bps;
        else
            out.down_goodput_bps += s.mean_goodput_bps;
        out.flows.push_back(std::move(s));
    }
    return out;
}

std::string metrics_to_json(const MetricsLog& log) {
    nlohmann::ordered_json j;
    j["schema"] = log.schema;
    j["seed"] = log.seed;
    j["duration_s"] = log.duration_s;
    j["metrics_interval_s"] = log.metrics_interval_s;
    j["scenario"] = log.scenario_echo;
    nlohmann::ordered_json flows = nlohmann::ordered_json::array();
    for (const auto& f : log.flows) {
        nlohmann::ordered_json fj;
        fj["name"] = f.name;
        fj["direction"] = direction_name(f.direction);
        fj["type"] = f.type;
        fj["dscp"] = f.dscp;
        fj["total_rx_bytes"] = f.total_rx_bytes;
        fj["total_tx_bytes"] = f.total_tx_bytes;
        fj["total_drops"] = f.total_drops;
        fj["total_filtered_acks"] = f.total_filtered;
        nlohmann::ordered_json samples = nlohmann::ordered_json::array();
        for (const auto& s : f.samples)
            samples.push_back({s.t, s.goodput_bps, s.rtt_ms, s.drops, s.filtered_acks});
        fj["samples"] = samples;
        nlohmann::ordered_json lat = nlohmann::ordered_json::array();
        for (const auto& l : f.latency) lat.push_back({l.t, l.ms});
        fj["latency"] = lat;
        flows.push_back(fj);
    }
    j["flows"] = flows;
    j["qdisc_up"] = qdisc_json(log.qdisc_up);
    j["qdisc_down"] = qdisc_json(log.qdisc_down);
    return j.dump(1, '\t') + "\n";
}

MetricsLog metrics_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MetricsLog log;
    log.schema = j.at("schema");
    if (log.schema != "cakesim-metrics/1")
        throw std::invalid_argument("unsupported metrics schema: " + log.schema);
    log.seed = j.at("seed");
    log.duration_s = j.at("duration_s");
    log.metrics_interval_s = j.at("metrics_interval_s");
    log.scenario_echo = j.at("scenario");
    for (const auto& fj : j.at("flows")) {
        FlowLog f;
        f.name = fj.at("name");
        f.direction =
            fj.at("direction") == "up" ? Direction::Up : Direction::Down;
        f.type = fj.at("type");
        f.dscp = fj.at("dscp");
        f.total_rx_bytes = fj.at("total_rx_bytes");
        f.total_tx_bytes = fj.at("total_tx_bytes");
        f.total_drops = fj.at("total_drops");
        f.total_filtered = fj.at("total_filtered_acks");
        for (const auto& sj : fj.at("samples")) {
            FlowSample s;
            s.t = sj.at(0);
            s.goodput_bps = sj.at(1);
            s.rtt_ms = sj.at(2);
            s.drops = sj.at(3);
            s.filtered_acks = sj.at(4);
            f.samples.push_back(s);
        }
        for (const auto& lj : fj.at("latency"))
            f.latency.push_back({lj.at(0), lj.at(1)});
        log.flows.push_back(std::move(f));
    }
    qdisc_from_json(j.at("qdisc_up"), log.qdisc_up);
    qdisc_from_json(j.at("qdisc_down"), log.qdisc_down);
    return log;
}

std::string flows_to_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "time_s,flow_id,direction,goodput_bps,rtt_ms,drops,filtered_acks\n";
    char buf[128];
    for (const auto& f : log.flows) {
        for (const auto& s : f.samples) {
            std::snprintf(buf, sizeof(buf), "%.3f", s.t);
            os << buf << ',' << f.name << ',' << direction_name(f.direction) << ',';
            std::snprintf(buf, sizeof(buf), "%.1f", s.goodput_bps);
            os << buf << ',';
            if (s.rtt_ms >= 0) {
                std::snprintf(buf, sizeof(buf), "%.3f", s.rtt_ms);
                os << buf;
            }
            os << ',' << s.drops << ',' << s.filtered_acks << "\n";
        }
    }
    return os.str();
}

std::string summary_to_text(const SummaryStats& s) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "steady-state window: %.1f .. %.1f s\n",
                  s.window_start_s, s.window_end_s);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-16s %-5s %14s %14s %9s %9s %9s %7s %9s\n",
                  "flow", "dir", "mean_bps", "median_bps", "p50_ms", "p95_ms",
                  "p99_ms", "drops", "filtered");
    os << buf;
    for (const auto& f : s.flows) {
        std::snprintf(buf, sizeof(buf),
                      "%-16s %-5s %14.0f %14.0f %9.2f %9.2f %9.2f %7llu %9llu\n",
                      f.name.c_str(), f.direction.c_str(), f.mean_goodput_bps,
                      f.median_goodput_bps, f.latency_p50_ms, f.latency_p95_ms,
                      f.latency_p99_ms, (unsigned long long)f.drops,
                      (unsigned long long)f.filtered_acks);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "aggregate: up %.0f bps, down %.0f bps\n",
                  s.up_goodput_bps, s.down_goodput_bps);
    os << buf;
    return os.str();
}

void write_metrics_files(const MetricsLog& log, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write_atomic = [&](const std::string& name, const std::string& content) {
        const fs::path final_path = fs::path(dir) / name;
        const fs::path tmp_path = fs::path(dir) / (name + ".tmp");
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + tmp_path.string());
            out << content;
            if (!out.good()) throw std::runtime_error("write failed: " + tmp_path.string());
        }
        fs::rename(tmp_path, final_path);
    };
    write_atomic("metrics.json", metrics_to_json(log));
    write_atomic("flows.csv", flows_to_csv(log));
}

} // namespace cakesim
