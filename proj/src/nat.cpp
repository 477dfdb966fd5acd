#include "cakesim/nat.hpp"

namespace cakesim {

uint16_t NatTable::map_port(const IpAddr& internal_ip, uint16_t internal_port,
                            Protocol proto) {
    auto k = key_of(internal_ip, internal_port, proto);
    auto it = by_internal_.find(k);
    if (it != by_internal_.end()) return it->second;
    if (next_port_ >= last_port_)
        throw std::runtime_error("NAT mapping table exhausted");
    uint16_t ext = next_port_++;
    by_internal_.emplace(k, ext);
    by_external_.emplace(std::make_pair(ext, uint8_t(proto)),
                         Internal{internal_ip, internal_port});
    return ext;
}

void NatTable::translate_outbound(Packet& pkt) {
    uint16_t ext = map_port(pkt.src_ip, pkt.src_port, pkt.protocol);
    pkt.internal_src_ip = pkt.src_ip;
    pkt.src_ip = public_ip_;
    pkt.src_port = ext;
}

void NatTable::translate_inbound(Packet& pkt) const {
    if (!(pkt.dst_ip == public_ip_)) return;
    if (auto in = internal_for(pkt.dst_port, pkt.protocol)) {
        pkt.internal_dst_ip = pkt.dst_ip;
        pkt.dst_ip = in->ip;
        pkt.dst_port = in->port;
    }
}

std::optional<NatTable::Internal> NatTable::internal_for(uint16_t external_port,
                                                         Protocol proto) const {
    auto it = by_external_.find({external_port, uint8_t(proto)});
    if (it == by_external_.end()) return std::nullopt;
    return it->second;
}

} // namespace cakesim
