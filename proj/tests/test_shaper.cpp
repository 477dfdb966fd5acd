#include <doctest.h>

#include <cstdint>
#include <vector>

#include "cakesim/rng.hpp"
#include "cakesim/shaper.hpp"

using namespace cakesim;

namespace {

// Independent step-function oracle for the on-wire size, written from
// the overhead/framing definitions rather than mirroring the production
// arithmetic.
uint32_t oracle_adjusted_len(uint32_t total_len, uint32_t network_offset,
                             int32_t overhead, Framing framing, uint32_t mpu) {
    long net = long(total_len) - long(network_offset) + overhead;
    if (net < long(mpu)) net = long(mpu);
    long wire = net;
    if (net > 0 && framing == Framing::Atm) {
        long cells = 0;
        while (cells * 48 < net) ++cells;
        wire = cells * 53;
    } else if (net > 0 && framing == Framing::Ptm) {
        long blocks = 0;
        while (blocks * 64 < net) ++blocks;
        wire = blocks * 65;
    }
    return wire < 1 ? 1u : uint32_t(wire);
}

ShaperConfig cfg_with(int32_t overhead, Framing framing, uint32_t mpu = 0) {
    ShaperConfig cfg;
    cfg.rate_bps = 10'000'000;
    cfg.overhead = overhead;
    cfg.framing = framing;
    cfg.mpu = mpu;
    return cfg;
}

} // namespace

TEST_CASE("adjusted length worked examples") {
    // 1514 on the wire, 14 bytes of Ethernet framing stripped.
    CHECK(compute_adjusted_len(1514, 14, cfg_with(8, Framing::Atm)) == 1696);
    CHECK(compute_adjusted_len(1514, 14, cfg_with(22, Framing::Ptm)) == 1560);
    CHECK(compute_adjusted_len(1514, 14, cfg_with(0, Framing::None)) == 1500);
}

TEST_CASE("adjusted length clamps to one byte and counts it") {
    uint64_t clamped = 0;
    ShaperConfig cfg = cfg_with(-100, Framing::None);
    CHECK(compute_adjusted_len(60, 14, cfg, &clamped) == 1);
    CHECK(clamped == 1);
    // ATM framing on a non-positive size also clamps.
    cfg = cfg_with(-64, Framing::Atm);
    CHECK(compute_adjusted_len(60, 14, cfg, &clamped) == 1);
    CHECK(clamped == 2);
}

TEST_CASE("mpu floors the size before framing") {
    ShaperConfig cfg = cfg_with(0, Framing::Atm, 64);
    // net 46 -> raised to 64 -> 2 cells
    CHECK(compute_adjusted_len(60, 14, cfg) == 106);
    cfg.framing = Framing::None;
    CHECK(compute_adjusted_len(60, 14, cfg) == 64);
}

TEST_CASE("adjusted length matches the oracle over random configurations") {
    Rng rng(0xC0FFEE);
    for (int i = 0; i < 20000; ++i) {
        const uint32_t offset = uint32_t(rng.below(32));
        const uint32_t total = offset + 1 + uint32_t(rng.below(9000));
        const int32_t overhead = int32_t(rng.below(73)) - 8; // [-8, 64]
        const Framing framing = Framing(rng.below(3));
        const uint32_t mpu = rng.below(4) == 0 ? uint32_t(rng.below(100)) : 0;
        ShaperConfig cfg = cfg_with(overhead, framing, mpu);
        CHECK(compute_adjusted_len(total, offset, cfg) ==
              oracle_adjusted_len(total, offset, overhead, framing, mpu));
    }
}

TEST_CASE("adjusted length is monotone and ATM-stepped") {
    ShaperConfig atm = cfg_with(0, Framing::Atm);
    uint32_t prev = 0;
    for (uint32_t total = 15; total < 3000; ++total) {
        const uint32_t adj = compute_adjusted_len(total, 14, atm);
        CHECK(adj >= prev);
        prev = adj;
        CHECK(adj % 53 == 0);
    }
    // step period 48: same cell count within a 48-byte bracket
    CHECK(compute_adjusted_len(14 + 1, 14, atm) == 53);
    CHECK(compute_adjusted_len(14 + 48, 14, atm) == 53);
    CHECK(compute_adjusted_len(14 + 49, 14, atm) == 106);
}

TEST_CASE("idle reset restarts the clock only when the backlog is empty") {
    ShaperState s(10'000'000);
    s.reset_to(SimTime::us(500));
    s.on_enqueue(0, SimTime::us(300));
    CHECK(s.t_next() == SimTime::us(300));

    s.reset_to(SimTime::us(500));
    s.on_enqueue(3, SimTime::us(300));
    CHECK(s.t_next() == SimTime::us(500));

    // a stale clock in the past snaps forward too: idle time never
    // accumulates transmission credit
    s.reset_to(SimTime::us(100));
    s.on_enqueue(0, SimTime::us(300));
    CHECK(s.t_next() == SimTime::us(300));
}

TEST_CASE("dequeue gate uses a strict comparison") {
    ShaperState s(10'000'000);
    s.reset_to(SimTime::us(400));
    CHECK(!s.gate(SimTime::us(399)).eligible);
    CHECK(s.gate(SimTime::us(399)).wait_until == SimTime::us(400));
    CHECK(s.gate(SimTime::us(400)).eligible);
    ShaperState fresh(10'000'000);
    CHECK(fresh.gate(SimTime()).eligible);
}

TEST_CASE("clock advance worked examples") {
    // 10 Mbps = 800 ns per byte
    ShaperState s(10'000'000);
    CHECK(s.time_per_byte_ns() == 800);
    s.advance(1696);
    CHECK(s.t_next() == SimTime::ns(1'356'800));
    s.advance(0);
    CHECK(s.t_next() == SimTime::ns(1'356'800));

    ShaperState g(1'000'000'000); // 8 ns per byte
    g.advance(1500);
    CHECK(g.t_next() == SimTime::ns(12'000));
}

TEST_CASE("clock advance carries the exact rational remainder") {
    // 3 Mbps: 8000/3 ns per byte does not divide evenly.
    const uint64_t rate = 3'000'000;
    ShaperState s(rate);
    uint64_t bytes = 0;
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const uint32_t len = 64 + uint32_t(rng.below(1500));
        s.advance(len);
        bytes += len;
    }
    // exact: floor(bytes * 8e9 / rate)
    const int64_t expect = int64_t((unsigned __int128)bytes * 8'000'000'000ull / rate);
    CHECK(s.t_next().count_ns() >= expect - 1);
    CHECK(s.t_next().count_ns() <= expect + 1);
}

TEST_CASE("no burst after idle: first two releases are one serialisation apart") {
    // Simulate the gate/advance cycle directly.
    const uint64_t rate = 10'000'000;
    ShaperState s(rate);
    SimTime now = SimTime::ms(50);
    s.reset_to(SimTime::ms(3)); // stale clock from an earlier busy period
    s.on_enqueue(0, now);       // idle reset
    REQUIRE(s.gate(now).eligible);
    const SimTime first_release = now;
    s.advance(1514);
    const auto gate = s.gate(now);
    REQUIRE(!gate.eligible);
    const SimTime second_release = gate.wait_until;
    CHECK((second_release - first_release).count_ns() == 1514 * 800);
}

TEST_CASE("schedule conservation over a busy interval") {
    const uint64_t rate = 10'000'000;
    ShaperState s(rate);
    SimTime now;
    uint64_t released_bytes = 0;
    std::vector<int64_t> times;
    Rng rng(42);
    for (int i = 0; i < 5000; ++i) {
        const auto gate = s.gate(now);
        if (!gate.eligible) now = gate.wait_until;
        const uint32_t len = 100 + uint32_t(rng.below(1415));
        times.push_back(now.count_ns());
        s.advance(len);
        released_bytes += len;
    }
    const double elapsed_s = double(times.back() - times.front()) * 1e-9;
    const double out_rate = double(released_bytes - 1514) * 8 / elapsed_s;
    CHECK(out_rate <= double(rate) * 1.0001);
    CHECK(out_rate >= double(rate) * (1.0 - 1514.0 * 8 / (double(rate) * elapsed_s)) * 0.999);
}

TEST_CASE("aggregate splitting") {
    Packet agg;
    agg.total_len = 66 + 4344;
    agg.payload_len = 4344;
    agg.network_offset = 14;
    agg.gso_seg_size = 1448;
    agg.protocol = Protocol::Tcp;
    TcpInfo t;
    t.seq = 1000;
    agg.tcp = t;

    ShaperConfig slow;
    slow.rate_bps = 10'000'000;
    SUBCASE("slow rate splits into mss segments") {
        auto segs = split_aggregate(agg, 1448, slow);
        REQUIRE(segs.size() == 3);
        uint32_t payload = 0;
        uint32_t expect_seq = 1000;
        for (const auto& s : segs) {
            CHECK(s.payload_len <= 1448);
            CHECK(s.total_len == 66 + s.payload_len);
            CHECK(s.tcp->seq == expect_seq);
            expect_seq += s.payload_len;
            payload += s.payload_len;
        }
        CHECK(payload == 4344);
    }
    SUBCASE("fast rate keeps the aggregate") {
        ShaperConfig fast;
        fast.rate_bps = 40'000'000'000ull;
        auto segs = split_aggregate(agg, 1448, fast);
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].payload_len == 4344);
    }
    SUBCASE("single-mss aggregate passes through") {
        Packet small = agg;
        small.payload_len = 1448;
        small.total_len = 66 + 1448;
        auto segs = split_aggregate(small, 1448, slow);
        REQUIRE(segs.size() == 1);
    }
    SUBCASE("zero payload returns the original") {
        Packet empty = agg;
        empty.payload_len = 0;
        empty.total_len = 66;
        auto segs = split_aggregate(empty, 1448, slow);
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].payload_len == 0);
    }
    SUBCASE("random payload partitions conserve bytes and order") {
        Rng rng(11);
        for (int i = 0; i < 500; ++i) {
            Packet p = agg;
            p.payload_len = 1 + uint32_t(rng.below(20000));
            p.total_len = 66 + p.payload_len;
            const uint32_t mss = 100 + uint32_t(rng.below(1500));
            p.gso_seg_size = mss;
            auto segs = split_aggregate(p, mss, slow);
            uint64_t payload = 0;
            uint32_t expect_seq = p.tcp->seq;
            for (const auto& s : segs) {
                CHECK(s.payload_len <= mss);
                CHECK(s.tcp->seq == expect_seq);
                expect_seq += s.payload_len;
                payload += s.payload_len;
            }
            CHECK(payload == p.payload_len);
            CHECK(segs.size() == (p.payload_len + mss - 1) / mss);
        }
    }
}
