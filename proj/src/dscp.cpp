#include "cakesim/dscp.hpp"

#include <array>
#include <cassert>
#include <cctype>
#include <stdexcept>

namespace cakesim {

namespace {

// Tier tables are configuration data, not protocol ground truth.
// Index is the code point, value the tier.

// Three tiers: 0 bulk (1/16 rate), 1 best effort, 2 latency sensitive
// (1/4 rate). Bulk holds CS1; the latency-sensitive tier holds TOS4,
// CS5, VA, EF, CS6, CS7.
constexpr std::array<uint8_t, 64> kDiffserv3 = [] {
    std::array<uint8_t, 64> t{};
    for (auto& v : t) v = 1;
    t[dscp::CS1] = 0;
    t[dscp::TOS4] = 2;
    t[dscp::CS5] = 2;
    t[dscp::VA] = 2;
    t[dscp::EF] = 2;
    t[dscp::CS6] = 2;
    t[dscp::CS7] = 2;
    return t;
}();

// Four tiers following the 802.11e access-category grouping:
// 0 background, 1 best effort, 2 video, 3 voice.
constexpr std::array<uint8_t, 64> kDiffserv4 = [] {
    std::array<uint8_t, 64> t{};
    for (auto& v : t) v = 1;
    t[dscp::CS1] = 0;
    t[dscp::LE] = 0;
    for (uint8_t cp : {dscp::TOS4, dscp::CS3, dscp::AF31, dscp::AF32, dscp::AF33,
                       dscp::CS4, dscp::AF41, dscp::AF42, dscp::AF43, dscp::CS5})
        t[cp] = 2;
    for (uint8_t cp : {dscp::VA, dscp::EF, dscp::CS6, dscp::CS7})
        t[cp] = 3;
    return t;
}();

} // namespace

uint8_t parse_dscp(const std::string& name) {
    static const std::pair<const char*, uint8_t> named[] = {
        {"CS0", dscp::CS0}, {"BE", dscp::CS0}, {"LE", dscp::LE},
        {"TOS4", dscp::TOS4},
        {"CS1", dscp::CS1}, {"BK", dscp::CS1},
        {"AF11", dscp::AF11}, {"AF12", dscp::AF12}, {"AF13", dscp::AF13},
        {"CS2", dscp::CS2},
        {"AF21", dscp::AF21}, {"AF22", dscp::AF22}, {"AF23", dscp::AF23},
        {"CS3", dscp::CS3},
        {"AF31", dscp::AF31}, {"AF32", dscp::AF32}, {"AF33", dscp::AF33},
        {"CS4", dscp::CS4},
        {"AF41", dscp::AF41}, {"AF42", dscp::AF42}, {"AF43", dscp::AF43},
        {"CS5", dscp::CS5}, {"VA", dscp::VA}, {"EF", dscp::EF},
        {"CS6", dscp::CS6}, {"CS7", dscp::CS7},
    };
    std::string up;
    for (char c : name) up.push_back(char(std::toupper(static_cast<unsigned char>(c))));
    for (const auto& [n, v] : named)
        if (up == n) return v;
    if (!up.empty() && std::isdigit(static_cast<unsigned char>(up[0]))) {
        int v = std::stoi(up);
        if (v >= 0 && v < 64) return uint8_t(v);
    }
    throw std::invalid_argument("unknown DSCP name: " + name);
}

std::string dscp_name(uint8_t value) {
    switch (value) {
        case dscp::CS0: return "CS0";
        case dscp::LE: return "LE";
        case dscp::TOS4: return "TOS4";
        case dscp::CS1: return "CS1";
        case dscp::CS2: return "CS2";
        case dscp::CS3: return "CS3";
        case dscp::CS4: return "CS4";
        case dscp::CS5: return "CS5";
        case dscp::VA: return "VA";
        case dscp::EF: return "EF";
        case dscp::CS6: return "CS6";
        case dscp::CS7: return "CS7";
        default: return std::to_string(int(value));
    }
}

DiffServMode parse_diffserv_mode(const std::string& name) {
    if (name == "besteffort") return DiffServMode::BestEffort;
    if (name == "diffserv3") return DiffServMode::Diffserv3;
    if (name == "diffserv4") return DiffServMode::Diffserv4;
    if (name == "diffserv8") return DiffServMode::Diffserv8;
    if (name == "diffserv8-strict") return DiffServMode::Diffserv8Strict;
    throw std::invalid_argument("unknown diffserv mode: " + name);
}

const char* diffserv_mode_name(DiffServMode mode) {
    switch (mode) {
        case DiffServMode::BestEffort: return "besteffort";
        case DiffServMode::Diffserv3: return "diffserv3";
        case DiffServMode::Diffserv4: return "diffserv4";
        case DiffServMode::Diffserv8: return "diffserv8";
        case DiffServMode::Diffserv8Strict: return "diffserv8-strict";
    }
    return "?";
}

int tier_count(DiffServMode mode) {
    switch (mode) {
        case DiffServMode::BestEffort: return 1;
        case DiffServMode::Diffserv3: return 3;
        case DiffServMode::Diffserv4: return 4;
        case DiffServMode::Diffserv8:
        case DiffServMode::Diffserv8Strict: return 8;
    }
    return 1;
}

int classify_dscp(uint8_t dscp_value, DiffServMode mode) {
    assert(dscp_value < 64);
    switch (mode) {
        case DiffServMode::BestEffort:
            return 0;
        case DiffServMode::Diffserv3:
            return kDiffserv3[dscp_value];
        case DiffServMode::Diffserv4:
            return kDiffserv4[dscp_value];
        case DiffServMode::Diffserv8:
        case DiffServMode::Diffserv8Strict:
            // CS0..CS7 land on tiers 0..7; everything else maps by its
            // 3-bit precedence field.
            return dscp_value >> 3;
    }
    return 0;
}

std::vector<RateFraction> tier_fractions(DiffServMode mode) {
    switch (mode) {
        case DiffServMode::BestEffort:
            return {{1, 1}};
        case DiffServMode::Diffserv3:
            // Bulk 1/16 and latency-sensitive 1/4; best effort takes the
            // remainder so the fractions sum to 1.
            return {{1, 16}, {11, 16}, {4, 16}};
        case DiffServMode::Diffserv4:
            return {{1, 16}, {7, 16}, {4, 16}, {4, 16}};
        case DiffServMode::Diffserv8:
        case DiffServMode::Diffserv8Strict: {
            // Halving series, highest tier capped at 1/4; sums to 1/2,
            // the slack is reachable through borrowing.
            std::vector<RateFraction> f(8);
            for (int i = 7; i >= 0; --i) {
                uint32_t den = 1u << (9 - i);
                f[i] = {1, i == 0 ? 256u : den};
            }
            return f;
        }
    }
    return {{1, 1}};
}

} // namespace cakesim
