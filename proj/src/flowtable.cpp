#include "cakesim/flowtable.hpp"

#include <cassert>
#include <cstring>
#include <stdexcept>

#include "cakesim/nat.hpp"

namespace cakesim {

namespace {

inline uint32_t rotl32(uint32_t x, int r) { return (x << r) | (x >> (32 - r)); }

inline uint32_t fmix32(uint32_t h) {
    h ^= h >> 16;
    h *= 0x85ebca6b;
    h ^= h >> 13;
    h *= 0xc2b2ae35;
    h ^= h >> 16;
    return h;
}

} // namespace

uint32_t hash_bytes(const uint8_t* data, size_t len, uint32_t salt) {
    // murmur3 x86_32
    const size_t nblocks = len / 4;
    uint32_t h1 = salt;
    const uint32_t c1 = 0xcc9e2d51;
    const uint32_t c2 = 0x1b873593;

    for (size_t i = 0; i < nblocks; ++i) {
        uint32_t k1;
        std::memcpy(&k1, data + i * 4, 4);
        k1 *= c1;
        k1 = rotl32(k1, 15);
        k1 *= c2;
        h1 ^= k1;
        h1 = rotl32(h1, 13);
        h1 = h1 * 5 + 0xe6546b64;
    }

    const uint8_t* tail = data + nblocks * 4;
    uint32_t k1 = 0;
    switch (len & 3) {
        case 3: k1 ^= uint32_t(tail[2]) << 16; [[fallthrough]];
        case 2: k1 ^= uint32_t(tail[1]) << 8; [[fallthrough]];
        case 1:
            k1 ^= tail[0];
            k1 *= c1;
            k1 = rotl32(k1, 15);
            k1 *= c2;
            h1 ^= k1;
    }

    h1 ^= uint32_t(len);
    return fmix32(h1);
}

uint32_t hash_flow(const FlowKey& key, uint32_t salt) {
    auto bytes = key.canonical_bytes();
    return hash_bytes(bytes.data(), bytes.size(), salt);
}

uint32_t hash_host(const IpAddr& ip, uint32_t salt) {
    uint8_t buf[17];
    std::memcpy(buf, ip.bytes.data(), 16);
    buf[16] = ip.len;
    // Distinct keying from the flow hash.
    return hash_bytes(buf, sizeof(buf), salt ^ 0x9e3779b9u);
}

FlowTable::FlowTable(const FlowTableConfig& cfg, uint32_t base_quantum)
    : cfg_(cfg) {
    if (cfg_.ways == 0 || cfg_.total_queues == 0 ||
        cfg_.total_queues % cfg_.ways != 0) {
        throw std::invalid_argument("total_queues must be a positive multiple of ways");
    }
    sets_ = cfg_.total_queues / cfg_.ways;
    flows_.resize(cfg_.total_queues);
    for (auto& f : flows_) f.quantum = base_quantum;
    hosts_src_.resize(cfg_.host_buckets);
    hosts_dst_.resize(cfg_.host_buckets);
}

FlowKey FlowTable::packet_key(const Packet& pkt, const NatTable* nat) const {
    FlowKey key = cfg_.nat_aware ? resolve_nat(pkt, nat) : FlowKey::of(pkt);
    switch (cfg_.key_mode) {
        case FlowKeyMode::FiveTuple:
            break;
        case FlowKeyMode::HostPair:
            key.src_port = 0;
            key.dst_port = 0;
            key.protocol = Protocol::Other;
            break;
        case FlowKeyMode::Blind:
            key = FlowKey{};
            break;
    }
    return key;
}

FlowLookup FlowTable::lookup_or_allocate(uint32_t hash) {
    const uint32_t set = hash % sets_;
    const uint32_t base = set * cfg_.ways;

    // Existing slot with this flow's tag, active or not.
    for (uint32_t w = 0; w < cfg_.ways; ++w) {
        FlowState& f = flows_[base + w];
        if (f.tag_valid && f.tag == hash) return {base + w, false};
    }
    // Free (inactive) slot.
    for (uint32_t w = 0; w < cfg_.ways; ++w) {
        FlowState& f = flows_[base + w];
        if (!f.active) {
            f.tag = hash;
            f.tag_valid = true;
            return {base + w, false};
        }
    }
    // Set is full: share a deterministic victim queue. The victim keeps
    // its own tag.
    const uint32_t victim = (hash / sets_) % cfg_.ways;
    ++collisions_;
    return {base + victim, true};
}

void FlowTable::activate(FlowState& flow, const FlowKey& key) {
    assert(!flow.active);
    flow.key = key;
    flow.src_id = hash_host(key.src_ip, cfg_.salt) % cfg_.host_buckets;
    flow.dst_id = hash_host(key.dst_ip, cfg_.salt) % cfg_.host_buckets;
    hosts_src_[flow.src_id].refcnt_src++;
    hosts_dst_[flow.dst_id].refcnt_dst++;
    flow.active = true;
    ++active_flows_;
}

void FlowTable::deactivate(FlowState& flow) {
    assert(flow.active);
    HostBucket& s = hosts_src_[flow.src_id];
    HostBucket& d = hosts_dst_[flow.dst_id];
    if (s.refcnt_src == 0 || d.refcnt_dst == 0)
        throw std::logic_error("host refcount underflow");
    s.refcnt_src--;
    d.refcnt_dst--;
    flow.active = false;
    --active_flows_;
}

uint32_t FlowTable::host_divisor(const FlowState& flow) const {
    const uint32_t src = hosts_src_[flow.src_id].refcnt_src;
    const uint32_t dst = hosts_dst_[flow.dst_id].refcnt_dst;
    uint32_t div = 1;
    switch (cfg_.isolation) {
        case IsolationMode::FlowOnly: div = 1; break;
        case IsolationMode::SrcHost: div = std::max(src, 1u); break;
        case IsolationMode::DstHost: div = std::max(dst, 1u); break;
        case IsolationMode::Triple: div = std::max({src, dst, 1u}); break;
    }
    return div;
}

uint32_t FlowTable::scaled_quantum(const FlowState& flow) const {
    return std::max(flow.quantum / host_divisor(flow), 1u);
}

bool FlowTable::refcounts_consistent() const {
    std::vector<uint32_t> src(hosts_src_.size(), 0), dst(hosts_dst_.size(), 0);
    for (const auto& f : flows_) {
        if (!f.active) continue;
        src[f.src_id]++;
        dst[f.dst_id]++;
    }
    for (size_t i = 0; i < hosts_src_.size(); ++i)
        if (hosts_src_[i].refcnt_src != src[i]) return false;
    for (size_t i = 0; i < hosts_dst_.size(); ++i)
        if (hosts_dst_[i].refcnt_dst != dst[i]) return false;
    return true;
}

FlowKey resolve_nat(const Packet& pkt, const NatTable* nat) {
    FlowKey key = FlowKey::of(pkt);
    if (!nat) return key;
    if (pkt.src_ip == nat->public_ip()) {
        if (auto in = nat->internal_for(pkt.src_port, pkt.protocol)) {
            key.src_ip = in->ip;
            key.src_port = in->port;
        }
    }
    if (pkt.dst_ip == nat->public_ip()) {
        if (auto in = nat->internal_for(pkt.dst_port, pkt.protocol)) {
            key.dst_ip = in->ip;
            key.dst_port = in->port;
        }
    }
    return key;
}

} // namespace cakesim
