#include <doctest.h>

#include <set>

#include "cakesim/dscp.hpp"
#include "cakesim/packet.hpp"

using namespace cakesim;

TEST_CASE("diffserv3 code point placement") {
    CHECK(classify_dscp(dscp::CS1, DiffServMode::Diffserv3) == 0);  // bulk
    CHECK(classify_dscp(dscp::EF, DiffServMode::Diffserv3) == 2);   // latency sensitive
    CHECK(classify_dscp(dscp::TOS4, DiffServMode::Diffserv3) == 2);
    CHECK(classify_dscp(dscp::VA, DiffServMode::Diffserv3) == 2);
    CHECK(classify_dscp(dscp::CS6, DiffServMode::Diffserv3) == 2);
    CHECK(classify_dscp(dscp::CS7, DiffServMode::Diffserv3) == 2);
    CHECK(classify_dscp(dscp::CS0, DiffServMode::Diffserv3) == 1);  // best effort
    CHECK(classify_dscp(dscp::AF11, DiffServMode::Diffserv3) == 1);
}

TEST_CASE("besteffort maps everything to tier 0") {
    for (int cp = 0; cp < 64; ++cp)
        CHECK(classify_dscp(uint8_t(cp), DiffServMode::BestEffort) == 0);
}

TEST_CASE("classification is total and covers the full tier range") {
    for (DiffServMode mode :
         {DiffServMode::BestEffort, DiffServMode::Diffserv3, DiffServMode::Diffserv4,
          DiffServMode::Diffserv8, DiffServMode::Diffserv8Strict}) {
        const int n = tier_count(mode);
        std::set<int> seen;
        for (int cp = 0; cp < 64; ++cp) {
            const int t = classify_dscp(uint8_t(cp), mode);
            CHECK(t >= 0);
            CHECK(t < n);
            seen.insert(t);
        }
        CHECK(int(seen.size()) == n);
    }
}

TEST_CASE("diffserv8-strict tier is monotone in precedence") {
    for (int cp = 0; cp < 64; ++cp) {
        const int t = classify_dscp(uint8_t(cp), DiffServMode::Diffserv8Strict);
        CHECK(t == cp >> 3);
    }
    int prev = -1;
    for (int prec = 0; prec < 8; ++prec) {
        const int t = classify_dscp(uint8_t(prec << 3), DiffServMode::Diffserv8Strict);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("tier fractions are sane") {
    for (DiffServMode mode :
         {DiffServMode::BestEffort, DiffServMode::Diffserv3, DiffServMode::Diffserv4,
          DiffServMode::Diffserv8}) {
        auto f = tier_fractions(mode);
        REQUIRE(int(f.size()) == tier_count(mode));
        double sum = 0;
        for (const auto& x : f) {
            CHECK(x.value() > 0);
            CHECK(x.value() <= 1.0);
            sum += x.value();
        }
        CHECK(sum <= 1.0 + 1e-12);
    }
    auto d3 = tier_fractions(DiffServMode::Diffserv3);
    CHECK(d3[0].value() == doctest::Approx(1.0 / 16));
    CHECK(d3[2].value() == doctest::Approx(1.0 / 4));
}

TEST_CASE("dscp names round-trip") {
    CHECK(parse_dscp("EF") == dscp::EF);
    CHECK(parse_dscp("CS1") == 8);
    CHECK(parse_dscp("cs1") == 8);
    CHECK(parse_dscp("46") == 46);
    CHECK(parse_dscp(dscp_name(dscp::VA)) == dscp::VA);
    CHECK_THROWS(parse_dscp("banana"));
    CHECK_THROWS(parse_dscp("64"));
}

TEST_CASE("TcpInfo unknown-option detection") {
    TcpInfo t;
    t.options = {tcpopt::Nop, tcpopt::Timestamp};
    CHECK(!t.has_unknown_option());
    t.options.push_back(200);
    CHECK(t.has_unknown_option());
}

TEST_CASE("flow key canonical bytes distinguish addresses and ports") {
    Packet p;
    p.src_ip = IpAddr::v4(10, 0, 0, 1);
    p.dst_ip = IpAddr::v4(10, 0, 0, 2);
    p.src_port = 1000;
    p.dst_port = 2000;
    p.protocol = Protocol::Tcp;
    FlowKey a = FlowKey::of(p);
    FlowKey b = a;
    CHECK(a.canonical_bytes() == b.canonical_bytes());
    b.src_port = 1001;
    CHECK(a.canonical_bytes() != b.canonical_bytes());
    FlowKey c = a;
    c.src_ip = IpAddr::v6({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 10, 0, 0, 1});
    CHECK(a.canonical_bytes() != c.canonical_bytes());
}

TEST_CASE("ip parsing") {
    CHECK(parse_ip("10.0.0.2").to_string() == "10.0.0.2");
    CHECK(parse_ip("2001:0db8:0000:0000:0000:0000:0000:0001").len == 16);
    CHECK_THROWS(parse_ip("300.0.0.1"));
    CHECK_THROWS(parse_ip("10.0.0"));
}
