#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "cakesim/packet.hpp"

namespace cakesim {

// Source NAT with an explicit mapping table. The simulator applies the
// translation on the egress path; a NAT-aware qdisc consults the same
// table to recover internal addresses.
class NatTable {
  public:
    explicit NatTable(IpAddr public_ip, uint16_t first_port = 40001,
                      uint16_t last_port = 65535)
        : public_ip_(public_ip), next_port_(first_port), last_port_(last_port) {}

    const IpAddr& public_ip() const { return public_ip_; }

    // Rewrites the source to the public address, allocating a port
    // mapping on first use, and records the internal address on the
    // packet. Destination-side translation for return traffic.
    void translate_outbound(Packet& pkt);
    void translate_inbound(Packet& pkt) const;

    uint16_t map_port(const IpAddr& internal_ip, uint16_t internal_port,
                      Protocol proto);

    struct Internal {
        IpAddr ip;
        uint16_t port;
    };
    std::optional<Internal> internal_for(uint16_t external_port, Protocol proto) const;

    size_t size() const { return by_external_.size(); }

  private:
    using InternalKey = std::tuple<std::array<uint8_t, 16>, uint8_t, uint16_t, uint8_t>;

    static InternalKey key_of(const IpAddr& ip, uint16_t port, Protocol proto) {
        return {ip.bytes, ip.len, port, uint8_t(proto)};
    }

    IpAddr public_ip_;
    uint16_t next_port_;
    uint16_t last_port_;
    std::map<InternalKey, uint16_t> by_internal_;
    std::map<std::pair<uint16_t, uint8_t>, Internal> by_external_;
};

} // namespace cakesim
