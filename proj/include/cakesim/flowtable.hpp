#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "cakesim/codel.hpp"
#include "cakesim/packet.hpp"

namespace cakesim {

class NatTable;

// Keyed 32-bit non-cryptographic hash (murmur3 finaliser construction)
// over an arbitrary byte string.
uint32_t hash_bytes(const uint8_t* data, size_t len, uint32_t salt);
uint32_t hash_flow(const FlowKey& key, uint32_t salt);
uint32_t hash_host(const IpAddr& ip, uint32_t salt);

enum class IsolationMode : uint8_t { FlowOnly, SrcHost, DstHost, Triple };
enum class FlowKeyMode : uint8_t { FiveTuple, HostPair, Blind };

struct FlowTableConfig {
    uint32_t total_queues = 1024;
    uint32_t ways = 8; // 1 = plain (direct-mapped) hashing
    uint32_t host_buckets = 1024;
    IsolationMode isolation = IsolationMode::Triple;
    FlowKeyMode key_mode = FlowKeyMode::FiveTuple;
    bool nat_aware = false;
    uint32_t salt = 0;
};

struct HostBucket {
    uint32_t refcnt_src = 0;
    uint32_t refcnt_dst = 0;
};

enum class ListMembership : uint8_t { None, New, Old };

struct FlowState {
    bool active = false;
    bool tag_valid = false;
    uint32_t tag = 0; // full flow hash of the queue owner
    FlowKey key;
    int64_t deficit = 0;
    uint32_t quantum = 1514; // base quantum, before host scaling
    uint32_t src_id = 0;
    uint32_t dst_id = 0;
    ListMembership membership = ListMembership::None;

    std::deque<Packet> queue;
    uint64_t queued_bytes = 0;

    CodelState codel;

    bool queue_empty() const { return queue.empty(); }
};

struct FlowLookup {
    uint32_t index = 0;
    bool collision = false; // set was full; sharing a victim queue
};

// 8-way set-associative flow table plus per-host reference counting
// for quantum scaling.
class FlowTable {
  public:
    explicit FlowTable(const FlowTableConfig& cfg, uint32_t base_quantum = 1514);

    const FlowTableConfig& config() const { return cfg_; }
    uint32_t sets() const { return sets_; }

    // Flow key as the table sees it: NAT-resolved if configured, reduced
    // to a host pair or a single queue per key_mode.
    FlowKey packet_key(const Packet& pkt, const NatTable* nat) const;

    uint32_t flow_hash(const FlowKey& key) const { return hash_flow(key, cfg_.salt); }

    // Selects the queue for this hash: an existing slot with the same
    // tag, a free slot in the set, or a shared victim slot (collision).
    FlowLookup lookup_or_allocate(uint32_t hash);

    FlowState& flow(uint32_t index) { return flows_[index]; }
    const FlowState& flow(uint32_t index) const { return flows_[index]; }
    uint32_t flow_count() const { return uint32_t(flows_.size()); }

    void activate(FlowState& flow, const FlowKey& key);
    void deactivate(FlowState& flow);

    // Host-scaled DRR quantum, never less than 1 byte.
    uint32_t scaled_quantum(const FlowState& flow) const;
    uint32_t host_divisor(const FlowState& flow) const;

    const HostBucket& src_bucket(uint32_t id) const { return hosts_src_[id]; }
    const HostBucket& dst_bucket(uint32_t id) const { return hosts_dst_[id]; }

    uint64_t collisions() const { return collisions_; }
    uint32_t active_flows() const { return active_flows_; }

    // Full-scan oracle: recompute every host refcount from the active
    // flows and compare with the maintained counters.
    bool refcounts_consistent() const;

  private:
    FlowTableConfig cfg_;
    uint32_t sets_;
    std::vector<FlowState> flows_;
    std::vector<HostBucket> hosts_src_;
    std::vector<HostBucket> hosts_dst_;
    uint64_t collisions_ = 0;
    uint32_t active_flows_ = 0;
};

// Flow key with pre-NAT (internal) addresses substituted where the
// translator has a mapping; identity otherwise.
FlowKey resolve_nat(const Packet& pkt, const NatTable* nat);

} // namespace cakesim
