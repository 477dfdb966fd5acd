#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "cakesim/time.hpp"

namespace cakesim {

// Opaque network address, IPv4 or IPv6 width. Hashing and comparison treat
// it as a byte string.
struct IpAddr {
    std::array<uint8_t, 16> bytes{};
    uint8_t len = 0; // 4 or 16

    static IpAddr v4(uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
        IpAddr ip;
        ip.len = 4;
        ip.bytes[0] = a; ip.bytes[1] = b; ip.bytes[2] = c; ip.bytes[3] = d;
        return ip;
    }
    static IpAddr v4_word(uint32_t w) {
        return v4(uint8_t(w >> 24), uint8_t(w >> 16), uint8_t(w >> 8), uint8_t(w));
    }
    static IpAddr v6(const std::array<uint8_t, 16>& b) {
        IpAddr ip;
        ip.len = 16;
        ip.bytes = b;
        return ip;
    }

    auto operator<=>(const IpAddr&) const = default;

    std::string to_string() const;
};

// Parses dotted-quad IPv4 or hex-groups IPv6; throws std::invalid_argument.
IpAddr parse_ip(const std::string& s);

enum class Protocol : uint8_t { Tcp = 6, Udp = 17, Other = 0 };

namespace tcpflag {
constexpr uint16_t Fin = 1 << 0;
constexpr uint16_t Syn = 1 << 1;
constexpr uint16_t Rst = 1 << 2;
constexpr uint16_t Psh = 1 << 3;
constexpr uint16_t Ack = 1 << 4;
constexpr uint16_t Urg = 1 << 5;
constexpr uint16_t Ece = 1 << 6;
constexpr uint16_t Cwr = 1 << 7;
} // namespace tcpflag

namespace tcpopt {
constexpr uint8_t Eol = 0;
constexpr uint8_t Nop = 1;
constexpr uint8_t Mss = 2;
constexpr uint8_t WScale = 3;
constexpr uint8_t SackPermitted = 4;
constexpr uint8_t Sack = 5;
constexpr uint8_t Timestamp = 8;

inline bool recognised(uint8_t kind) {
    switch (kind) {
        case Eol: case Nop: case Mss: case WScale:
        case SackPermitted: case Sack: case Timestamp:
            return true;
        default:
            return false;
    }
}
} // namespace tcpopt

struct TcpInfo {
    uint32_t seq = 0;
    uint32_t ack = 0;
    uint16_t flags = 0;
    uint16_t window = 0;
    std::vector<std::pair<uint32_t, uint32_t>> sack_blocks; // [start, end)
    std::vector<uint8_t> options; // option kinds present

    bool has_flag(uint16_t f) const { return (flags & f) != 0; }
    bool has_option(uint8_t kind) const {
        for (uint8_t k : options)
            if (k == kind) return true;
        return false;
    }
    bool has_unknown_option() const {
        for (uint8_t k : options)
            if (!tcpopt::recognised(k)) return true;
        return false;
    }
};

// Modulo-32-bit sequence comparisons.
inline bool seq_after(uint32_t a, uint32_t b) { return int32_t(a - b) > 0; }
inline bool seq_geq(uint32_t a, uint32_t b) { return int32_t(a - b) >= 0; }

enum class Direction : uint8_t { Up = 0, Down = 1 };

inline const char* direction_name(Direction d) {
    return d == Direction::Up ? "up" : "down";
}

// Simulated datagram. total_len includes link, network and transport
// headers; network_offset is the link-layer encapsulation preceding the
// network header; adj_len is filled in by the shaper.
struct Packet {
    IpAddr src_ip;
    IpAddr dst_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Protocol protocol = Protocol::Other;
    uint8_t dscp = 0; // < 64

    uint32_t total_len = 0;
    uint32_t network_offset = 0;
    uint32_t adj_len = 0;
    uint32_t payload_len = 0;
    uint32_t gso_seg_size = 0; // > 0 marks an offload aggregate

    std::optional<TcpInfo> tcp;

    SimTime enqueue_time;
    SimTime first_sent_time;

    // Pre-NAT addresses, recorded by the translator.
    std::optional<IpAddr> internal_src_ip;
    std::optional<IpAddr> internal_dst_ip;

    // Simulation metadata: owning flow (for metrics) and application
    // send timestamp (latency probes).
    uint32_t flow_tag = 0;
    SimTime app_send_time;

    bool is_aggregate() const { return gso_seg_size > 0; }
};

// Canonical flow identity; addresses are post-NAT-resolution when the
// qdisc runs NAT-aware.
struct FlowKey {
    IpAddr src_ip;
    IpAddr dst_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Protocol protocol = Protocol::Other;

    auto operator<=>(const FlowKey&) const = default;

    // Fixed-width canonical encoding, so equal keys hash equally.
    std::array<uint8_t, 39> canonical_bytes() const {
        std::array<uint8_t, 39> out{};
        out[0] = src_ip.len;
        std::memcpy(out.data() + 1, src_ip.bytes.data(), 16);
        out[17] = dst_ip.len;
        std::memcpy(out.data() + 18, dst_ip.bytes.data(), 16);
        out[34] = uint8_t(src_port >> 8);
        out[35] = uint8_t(src_port & 0xff);
        out[36] = uint8_t(dst_port >> 8);
        out[37] = uint8_t(dst_port & 0xff);
        out[38] = uint8_t(protocol);
        return out;
    }

    static FlowKey of(const Packet& p) {
        return FlowKey{p.src_ip, p.dst_ip, p.src_port, p.dst_port, p.protocol};
    }
};

} // namespace cakesim
