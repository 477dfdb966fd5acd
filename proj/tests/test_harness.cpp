#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cakesim/cli.hpp"
#include "cakesim/metrics.hpp"
#include "cakesim/netsim.hpp"
#include "cakesim/scenario.hpp"

using namespace cakesim;

namespace {

std::string tiny_scenario_text() {
    return "[general]\n"
           "duration 3s\n"
           "seed 11\n"
           "metrics-interval 1s\n"
           "\n[link]\n"
           "rate-up 100Mbit\n"
           "rate-down 100Mbit\n"
           "delay 5ms\n"
           "qdisc-up cake bandwidth 10Mbit besteffort\n"
           "qdisc-down cake bandwidth 10Mbit besteffort\n"
           "nat off\n"
           "\n[host c]\nip 10.0.0.2\nside lan\n"
           "\n[host s]\nip 198.51.100.1\nside wan\n"
           "\n[flow f1]\ntype tcp\nsrc c\ndst s\ndscp CS0\n";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("scenario parse and serialise round-trip") {
    ScenarioConfig cfg = parse_scenario(tiny_scenario_text());
    CHECK(cfg.duration == SimTime::sec(3));
    CHECK(cfg.seed == 11);
    REQUIRE(cfg.hosts.size() == 2);
    REQUIRE(cfg.flows.size() == 1);
    CHECK(cfg.flows[0].type == FlowType::Tcp);

    const std::string text2 = serialize_scenario(cfg);
    ScenarioConfig cfg2 = parse_scenario(text2);
    CHECK(cfg == cfg2);
}

TEST_CASE("parse errors carry line and field context") {
    std::string bad = "[general]\n"
                      "duration 3s\n"
                      "frobnicate 12\n" // line 3
                      "\n[link]\n"
                      "rate-up banana\n"; // line 6
    try {
        parse_scenario(bad);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        REQUIRE(e.issues().size() == 2);
        CHECK(e.issues()[0].line == 3);
        CHECK(e.issues()[0].field == "frobnicate");
        CHECK(e.issues()[1].line == 6);
        CHECK(e.issues()[1].field == "rate-up");
    }
}

TEST_CASE("undefined endpoint references are named") {
    std::string bad = tiny_scenario_text() + "\n[flow f2]\ntype tcp\nsrc c\ndst ghost\n";
    try {
        parse_scenario(bad);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        bool found = false;
        for (const auto& i : e.issues())
            found = found || i.message.find("ghost") != std::string::npos;
        CHECK(found);
    }
}

TEST_CASE("every built-in preset parses, validates and round-trips") {
    auto names = preset_names();
    CHECK(names.size() == 5);
    for (const auto& name : names) {
        const std::string* text = preset_text(name);
        REQUIRE(text != nullptr);
        ScenarioConfig cfg = parse_scenario(*text);
        ScenarioConfig again = parse_scenario(serialize_scenario(cfg));
        CHECK(cfg == again);
    }
    // the rrul preset matches its description: 4+4 TCP flows, 3 probes
    ScenarioConfig rrul = parse_scenario(*preset_text("rrul"));
    int tcp = 0, ping = 0;
    for (const auto& f : rrul.flows) {
        if (f.type == FlowType::Tcp) ++tcp;
        if (f.type == FlowType::Ping) ++ping;
    }
    CHECK(tcp == 8);
    CHECK(ping == 3);
    CHECK(rrul.link.delay == SimTime::ms(25));
}

TEST_CASE("qdisc spec strings map onto module configuration keys") {
    QdiscSpec spec = parse_qdisc_spec(
        "cake bandwidth 10Mbit diffserv4 dsthost nat on ack-filter aggressive "
        "overhead 18 atm mpu 64 split-gso off quantum 300 memlimit 4MB "
        "target 6ms interval 120ms");
    CHECK(spec.kind == QdiscSpec::Kind::Cake);
    CHECK(spec.cake.shaper.rate_bps == 10'000'000);
    CHECK(spec.cake.diffserv == DiffServMode::Diffserv4);
    CHECK(spec.cake.isolation == IsolationMode::DstHost);
    CHECK(spec.cake.nat_aware);
    CHECK(spec.cake.ack_filter == AckFilterMode::Aggressive);
    CHECK(spec.cake.shaper.overhead == 18);
    CHECK(spec.cake.shaper.framing == Framing::Atm);
    CHECK(spec.cake.shaper.mpu == 64);
    CHECK(spec.cake.shaper.split_gso == SplitGso::Off);
    CHECK(spec.cake.quantum == 300);
    CHECK(spec.cake.memlimit == 4 * 1024 * 1024);
    CHECK(spec.cake.target == SimTime::ms(6));
    CHECK(spec.cake.interval == SimTime::ms(120));

    // later tokens win, which is what CLI overrides rely on
    QdiscSpec spec2 = parse_qdisc_spec("cake bandwidth 10Mbit ack-filter off "
                                       "ack-filter aggressive");
    CHECK(spec2.cake.ack_filter == AckFilterMode::Aggressive);

    QdiscSpec fq = parse_qdisc_spec("fq_codel");
    CHECK(fq.cake.shaper.rate_bps == 0);
    CHECK(fq.cake.ways == 1);
    CHECK(fq.cake.isolation == IsolationMode::FlowOnly);
    CHECK(fq.cake.diffserv == DiffServMode::BestEffort);

    QdiscSpec fifo = parse_qdisc_spec("fifo limit 64KB");
    CHECK(fifo.kind == QdiscSpec::Kind::Fifo);
    CHECK(fifo.fifo_limit == 64 * 1024);

    CHECK_THROWS(parse_qdisc_spec("cake bogus-token"));
    CHECK_THROWS(parse_qdisc_spec("htb rate 10Mbit"));
}

TEST_CASE("metrics json round-trips through the parser") {
    ScenarioConfig cfg = parse_scenario(tiny_scenario_text());
    cfg.duration = SimTime::sec(12);
    MetricsLog log = run_scenario(cfg);
    MetricsLog back = metrics_from_json(metrics_to_json(log));
    CHECK(metrics_to_json(back) == metrics_to_json(log));
    SummaryStats a = summarize(log, SimTime::sec(1));
    SummaryStats b = summarize(back, SimTime::sec(1));
    CHECK(a.up_goodput_bps == b.up_goodput_bps);
}

TEST_CASE("cli run writes metrics and reruns byte-identically") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cakesim_cli_test";
    fs::remove_all(dir);
    const fs::path scen = dir / "tiny.scn";
    fs::create_directories(dir);
    {
        std::ofstream out(scen);
        out << tiny_scenario_text();
    }

    const fs::path out1 = dir / "run1";
    const fs::path out2 = dir / "run2";
    CHECK(run_cli({"run", scen.string(), "--out", out1.string(), "--quiet"}) == 0);
    CHECK(run_cli({"run", scen.string(), "--out", out2.string(), "--quiet"}) == 0);
    REQUIRE(fs::exists(out1 / "metrics.json"));
    REQUIRE(fs::exists(out1 / "flows.csv"));
    CHECK(slurp(out1 / "metrics.json") == slurp(out2 / "metrics.json"));
    CHECK(slurp(out1 / "flows.csv") == slurp(out2 / "flows.csv"));

    // csv header matches the documented schema
    const std::string csv = slurp(out1 / "flows.csv");
    CHECK(csv.rfind("time_s,flow_id,direction,goodput_bps,rtt_ms,drops,filtered_acks\n",
                    0) == 0);

    // summarize consumes the json it wrote
    CHECK(run_cli({"summarize", (out1 / "metrics.json").string()}) == 1); // 3 s run: window too long
    fs::remove_all(dir);
}

TEST_CASE("cli failure leaves no partial output") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cakesim_cli_fail";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path scen = dir / "bad.scn";
    {
        std::ofstream out(scen);
        out << "[general]\nduration 3s\n\n[flow f]\ntype tcp\nsrc a\ndst b\n";
    }
    const fs::path out = dir / "out";
    CHECK(run_cli({"run", scen.string(), "--out", out.string(), "--quiet"}) != 0);
    CHECK(!fs::exists(out / "metrics.json"));
    CHECK(!fs::exists(out / "flows.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli presets and collision subcommands") {
    namespace fs = std::filesystem;
    CHECK(run_cli({"presets"}) == 0);
    CHECK(run_cli({"presets", "--show", "rrul"}) == 0);
    CHECK(run_cli({"presets", "--show", "nope"}) == 1);

    const fs::path dir = fs::temp_directory_path() / "cakesim_coll";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path csv = dir / "curve.csv";
    CHECK(run_cli({"collision", "--queues", "1024", "--ways", "8", "--max-flows",
                   "100", "--out", csv.string()}) == 0);
    const std::string text = slurp(csv);
    // header plus one row per flow count
    size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 101);
    CHECK(text.rfind("flows,p_setassoc,p_plain\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli run accepts a preset name and qdisc keyword overrides") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cakesim_preset_run";
    fs::remove_all(dir);
    CHECK(run_cli({"run", "presets/rrul", "--duration", "2s", "--ack-filter", "on",
                   "--quantum", "500", "--out", dir.string(), "--quiet"}) == 0);
    CHECK(fs::exists(dir / "metrics.json"));
    // the echoed scenario carries the overrides
    MetricsLog log = metrics_from_json(slurp(dir / "metrics.json"));
    CHECK(log.scenario_echo.find("ack-filter on") != std::string::npos);
    CHECK(log.scenario_echo.find("quantum 500") != std::string::npos);
    fs::remove_all(dir);
}
