#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cakesim {

// Standard DiffServ code points.
namespace dscp {
constexpr uint8_t CS0 = 0;
constexpr uint8_t LE = 1;
constexpr uint8_t TOS4 = 4;
constexpr uint8_t CS1 = 8;
constexpr uint8_t AF11 = 10, AF12 = 12, AF13 = 14;
constexpr uint8_t CS2 = 16;
constexpr uint8_t AF21 = 18, AF22 = 20, AF23 = 22;
constexpr uint8_t CS3 = 24;
constexpr uint8_t AF31 = 26, AF32 = 28, AF33 = 30;
constexpr uint8_t CS4 = 32;
constexpr uint8_t AF41 = 34, AF42 = 36, AF43 = 38;
constexpr uint8_t CS5 = 40;
constexpr uint8_t VA = 44;
constexpr uint8_t EF = 46;
constexpr uint8_t CS6 = 48;
constexpr uint8_t CS7 = 56;
} // namespace dscp

// Name <-> value helpers for config files ("EF", "CS1", "AF41", or a
// decimal number). parse throws std::invalid_argument on bad input.
uint8_t parse_dscp(const std::string& name);
std::string dscp_name(uint8_t value);

enum class DiffServMode : uint8_t {
    BestEffort,
    Diffserv3,
    Diffserv4,
    Diffserv8,
    Diffserv8Strict,
};

DiffServMode parse_diffserv_mode(const std::string& name);
const char* diffserv_mode_name(DiffServMode mode);

int tier_count(DiffServMode mode);

// Maps a code point to the priority tier index for the mode
// (0 = lowest priority). Total over all 64 code points.
int classify_dscp(uint8_t dscp_value, DiffServMode mode);

// Per-tier share of the shaped rate; also the weights used by the
// tier-level DRR when the shaper is off.
struct RateFraction {
    uint32_t num = 1;
    uint32_t den = 1;
    double value() const { return double(num) / double(den); }
};

std::vector<RateFraction> tier_fractions(DiffServMode mode);

} // namespace cakesim
