#include "cakesim/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cakesim/analysis.hpp"
#include "cakesim/metrics.hpp"
#include "cakesim/netsim.hpp"
#include "cakesim/rng.hpp"
#include "cakesim/scenario.hpp"

namespace cakesim {

namespace {

std::string load_scenario_text(const std::string& ref) {
    namespace fs = std::filesystem;
    if (fs::exists(ref)) {
        std::ifstream in(ref);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    std::string name = ref;
    if (name.rfind("presets/", 0) == 0) name = name.substr(8);
    if (const std::string* text = preset_text(name)) return *text;
    throw std::runtime_error("no such scenario file or preset: " + ref);
}

struct QdiscOverrides {
    std::string bandwidth, bandwidth_up, bandwidth_down;
    std::string diffserv, isolation, nat, ack_filter;
    std::string overhead, mpu, split_gso, quantum, memlimit, target, interval;
    bool atm = false, ptm = false, noatm = false;
    std::string qdisc_up, qdisc_down;

    std::string tokens() const {
        std::ostringstream os;
        if (!diffserv.empty()) os << ' ' << diffserv;
        if (!isolation.empty()) os << ' ' << isolation;
        if (!nat.empty()) os << " nat " << nat;
        if (!ack_filter.empty()) os << " ack-filter " << ack_filter;
        if (!overhead.empty()) os << " overhead " << overhead;
        if (atm) os << " atm";
        if (ptm) os << " ptm";
        if (noatm) os << " noatm";
        if (!mpu.empty()) os << " mpu " << mpu;
        if (!split_gso.empty()) os << " split-gso " << split_gso;
        if (!quantum.empty()) os << " quantum " << quantum;
        if (!memlimit.empty()) os << " memlimit " << memlimit;
        if (!target.empty()) os << " target " << target;
        if (!interval.empty()) os << " interval " << interval;
        return os.str();
    }

    // Later tokens win in the qdisc spec grammar, so overrides append.
    void apply(ScenarioConfig& cfg) const {
        if (!qdisc_up.empty()) cfg.link.qdisc_up = qdisc_up;
        if (!qdisc_down.empty()) cfg.link.qdisc_down = qdisc_down;
        const std::string extra = tokens();
        auto patch = [&](std::string& spec, const std::string& bw) {
            if (spec.rfind("cake", 0) == 0) {
                if (!bw.empty()) spec += " bandwidth " + bw;
                spec += extra;
            }
        };
        patch(cfg.link.qdisc_up, !bandwidth_up.empty() ? bandwidth_up : bandwidth);
        patch(cfg.link.qdisc_down, !bandwidth_down.empty() ? bandwidth_down : bandwidth);
        if (nat == "on") cfg.link.nat = true;
        if (nat == "off" && !nat.empty()) cfg.link.nat = false;
    }
};

int cmd_run(const std::string& scenario_ref, const std::string& seed_opt,
            const std::string& duration_opt, const std::string& out_dir,
            const QdiscOverrides& ov, bool quiet) {
    ScenarioConfig cfg = parse_scenario(load_scenario_text(scenario_ref));

    if (!seed_opt.empty()) {
        cfg.seed = std::stoull(seed_opt);
    } else if (const char* env = std::getenv("CAKESIM_SEED")) {
        cfg.seed = std::stoull(env);
    }
    if (!duration_opt.empty()) cfg.duration = parse_time(duration_opt);
    ov.apply(cfg);
    validate_scenario(cfg);

    MetricsLog log = run_scenario(cfg);
    write_metrics_files(log, out_dir);
    if (!quiet) {
        std::cout << "wrote " << (std::filesystem::path(out_dir) / "metrics.json").string()
                  << " and " << (std::filesystem::path(out_dir) / "flows.csv").string()
                  << "\n";
        std::cout << summary_to_text(summarize(log));
    }
    return 0;
}

int cmd_presets(const std::string& show) {
    if (!show.empty()) {
        const std::string* text = preset_text(show);
        if (!text) {
            std::cerr << "no such preset: " << show << "\n";
            return 1;
        }
        std::cout << *text;
        return 0;
    }
    for (const auto& name : preset_names())
        std::printf("%-16s %s\n", name.c_str(), preset_description(name).c_str());
    return 0;
}

int cmd_collision(uint64_t queues, uint64_t ways, uint64_t max_flows, uint64_t step,
                  uint64_t mc_trials, uint64_t seed, const std::string& out) {
    std::ostringstream os;
    os << "flows,p_setassoc,p_plain";
    if (mc_trials > 0) os << ",p_setassoc_mc";
    os << "\n";
    Rng rng(seed);
    char buf[64];
    for (uint64_t m = step; m <= max_flows; m += step) {
        os << m << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", collision_prob_setassoc(m, queues, ways));
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", collision_prob_plain(m, queues));
        os << buf;
        if (mc_trials > 0) {
            std::snprintf(buf, sizeof(buf), "%.9g",
                          collision_prob_setassoc_mc(m, queues, ways, mc_trials, rng));
            os << ',' << buf;
        }
        os << "\n";
    }
    if (out.empty() || out == "-") {
        std::cout << os.str();
    } else {
        const std::string tmp = out + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) {
                std::cerr << "cannot write " << tmp << "\n";
                return 1;
            }
            f << os.str();
        }
        std::filesystem::rename(tmp, out);
    }
    return 0;
}

int cmd_summarize(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot read " << path << "\n";
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    MetricsLog log = metrics_from_json(ss.str());
    std::cout << summary_to_text(summarize(log));
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"cakesim: queue-management experiments on a simulated link"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a scenario file or preset");
    std::string scenario_ref, seed_opt, duration_opt, out_dir = ".";
    bool quiet = false;
    QdiscOverrides ov;
    run->add_option("scenario", scenario_ref, "scenario file or preset name")->required();
    run->add_option("--seed", seed_opt, "override the scenario seed");
    run->add_option("--duration", duration_opt, "override the run duration (e.g. 30s)");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--quiet", quiet, "suppress the summary printout");
    run->add_option("--bandwidth", ov.bandwidth, "cake shaper rate for both directions");
    run->add_option("--bandwidth-up", ov.bandwidth_up, "cake shaper rate, up direction");
    run->add_option("--bandwidth-down", ov.bandwidth_down, "cake shaper rate, down direction");
    run->add_option("--diffserv", ov.diffserv,
                    "besteffort|diffserv3|diffserv4|diffserv8|diffserv8-strict");
    run->add_option("--isolation", ov.isolation,
                    "flows|hosts|flowblind|srchost|dsthost|triple-isolate");
    run->add_option("--nat", ov.nat, "nat awareness on|off");
    run->add_option("--ack-filter", ov.ack_filter, "off|on|aggressive");
    run->add_option("--overhead", ov.overhead, "per-packet overhead bytes");
    run->add_flag("--atm", ov.atm, "ATM cell framing");
    run->add_flag("--ptm", ov.ptm, "PTM framing");
    run->add_flag("--noatm", ov.noatm, "disable framing compensation");
    run->add_option("--mpu", ov.mpu, "minimum adjusted packet size");
    run->add_option("--split-gso", ov.split_gso, "on|off|auto");
    run->add_option("--quantum", ov.quantum, "DRR quantum bytes");
    run->add_option("--memlimit", ov.memlimit, "buffer limit, e.g. 4MB");
    run->add_option("--target", ov.target, "AQM target, e.g. 5ms");
    run->add_option("--interval", ov.interval, "AQM interval, e.g. 100ms");

    // presets
    auto* presets = app.add_subcommand("presets", "list built-in scenarios");
    std::string show;
    presets->add_option("--show", show, "print the scenario text of a preset");

    // collision
    auto* collision =
        app.add_subcommand("collision", "hash collision probability curve as CSV");
    uint64_t queues = 1024, ways = 8, max_flows = 5000, step = 1, mc = 0, mc_seed = 1;
    std::string coll_out;
    collision->add_option("--queues", queues, "total queues");
    collision->add_option("--ways", ways, "set associativity");
    collision->add_option("--max-flows", max_flows, "last row of the curve");
    collision->add_option("--step", step, "row spacing");
    collision->add_option("--montecarlo", mc, "add a Monte Carlo column with N trials");
    collision->add_option("--seed", mc_seed, "Monte Carlo seed");
    collision->add_option("--out", coll_out, "output file (default stdout)");

    // summarize
    auto* summ = app.add_subcommand("summarize", "steady-state stats from metrics.json");
    std::string metrics_path;
    summ->add_option("log", metrics_path, "path to metrics.json")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) return cmd_run(scenario_ref, seed_opt, duration_opt, out_dir, ov, quiet);
        if (presets->parsed()) return cmd_presets(show);
        if (collision->parsed())
            return cmd_collision(queues, ways, max_flows, step, mc, mc_seed, coll_out);
        if (summ->parsed()) return cmd_summarize(metrics_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace cakesim
