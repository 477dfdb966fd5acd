#include "cakesim/shaper.hpp"

#include <cassert>

namespace cakesim {

uint32_t compute_adjusted_len(uint32_t total_len, uint32_t network_offset,
                              const ShaperConfig& cfg, uint64_t* clamp_count) {
    assert(network_offset < total_len);
    int64_t adj = int64_t(total_len) - int64_t(network_offset) + cfg.overhead;
    if (adj < int64_t(cfg.mpu)) adj = int64_t(cfg.mpu);

    if (adj > 0) {
        if (cfg.framing == Framing::Atm) {
            adj = (adj + 47) / 48 * 53;
        } else if (cfg.framing == Framing::Ptm) {
            adj = (adj + 63) / 64 * 65;
        }
    }
    if (adj < 1) {
        if (clamp_count) ++*clamp_count;
        adj = 1;
    }
    return uint32_t(adj);
}

std::vector<Packet> split_aggregate(const Packet& pkt, uint32_t mss,
                                    const ShaperConfig& cfg) {
    if (!pkt.is_aggregate() || !cfg.should_split() || pkt.payload_len == 0 ||
        mss == 0 || pkt.payload_len <= mss) {
        return {pkt};
    }

    const uint32_t header_len = pkt.total_len - pkt.payload_len;
    const uint32_t n = (pkt.payload_len + mss - 1) / mss;
    std::vector<Packet> out;
    out.reserve(n);
    uint32_t offset = 0;
    for (uint32_t i = 0; i < n; ++i) {
        Packet seg = pkt;
        seg.gso_seg_size = 0;
        seg.payload_len = std::min(mss, pkt.payload_len - offset);
        seg.total_len = header_len + seg.payload_len;
        seg.adj_len = 0;
        if (seg.tcp) seg.tcp->seq = pkt.tcp->seq + offset;
        offset += seg.payload_len;
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace cakesim
