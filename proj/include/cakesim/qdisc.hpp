#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cakesim/ackfilter.hpp"
#include "cakesim/codel.hpp"
#include "cakesim/dscp.hpp"
#include "cakesim/flowtable.hpp"
#include "cakesim/packet.hpp"
#include "cakesim/shaper.hpp"
#include "cakesim/time.hpp"

namespace cakesim {

class NatTable;

enum class DropCause : uint8_t { Overlimit = 0, Codel = 1, AckFilter = 2, Tail = 3 };

inline const char* drop_cause_name(DropCause c) {
    switch (c) {
        case DropCause::Overlimit: return "overlimit";
        case DropCause::Codel: return "codel";
        case DropCause::AckFilter: return "ackfilter";
        case DropCause::Tail: return "tail";
    }
    return "?";
}

using DropSink = std::function<void(const Packet&, DropCause)>;

struct QdiscStats {
    uint64_t enq_pkts = 0, enq_bytes = 0; // accepted into a queue
    uint64_t tx_pkts = 0, tx_bytes = 0;
    std::array<uint64_t, 4> drop_pkts{};
    std::array<uint64_t, 4> drop_bytes{};
    uint64_t backlog_pkts = 0, backlog_bytes = 0; // snapshot at stats()
    uint64_t collisions = 0;
    uint64_t adj_clamped = 0;
    std::vector<uint64_t> tier_tx_bytes;
    std::vector<uint64_t> tier_tx_pkts;

    uint64_t filtered_acks() const {
        return drop_pkts[size_t(DropCause::AckFilter)];
    }
    uint64_t total_drop_pkts() const {
        uint64_t s = 0;
        for (auto v : drop_pkts) s += v;
        return s;
    }
    uint64_t total_drop_bytes() const {
        uint64_t s = 0;
        for (auto v : drop_bytes) s += v;
        return s;
    }
};

// Queue-management instance attached to one link direction. enqueue
// returns false when the arriving packet itself was dropped. dequeue
// either yields a packet, a wake time (shaper gate), or neither (idle
// until the next enqueue).
class Qdisc {
  public:
    virtual ~Qdisc() = default;

    struct Out {
        std::optional<Packet> pkt;
        std::optional<SimTime> wake;
    };

    virtual bool enqueue(Packet pkt, SimTime now) = 0;
    virtual Out dequeue(SimTime now) = 0;
    virtual uint64_t backlog_pkts() const = 0;
    virtual uint64_t backlog_bytes() const = 0;
    virtual const QdiscStats& stats() const = 0;

    void set_drop_sink(DropSink s) { drop_sink_ = std::move(s); }

  protected:
    void report_drop(const Packet& p, DropCause c) {
        if (drop_sink_) drop_sink_(p, c);
    }
    DropSink drop_sink_;
};

struct CakeConfig {
    ShaperConfig shaper;
    DiffServMode diffserv = DiffServMode::Diffserv3;
    IsolationMode isolation = IsolationMode::Triple;
    FlowKeyMode key_mode = FlowKeyMode::FiveTuple;
    bool nat_aware = false;
    AckFilterMode ack_filter = AckFilterMode::Off;
    uint32_t quantum = 1514;
    uint64_t memlimit = 0; // 0 = max(4 MB, 15 x rate * interval)
    SimTime target = SimTime::ms(5);
    SimTime interval = SimTime::ms(100);
    uint32_t total_queues = 1024;
    uint32_t ways = 8;
    uint32_t host_buckets = 1024;
    uint32_t salt = 0;

    // The comparison baseline: flow fairness only, one tier, plain
    // (direct-mapped) hashing, no ACK filter, no shaper.
    static CakeConfig fq_codel_preset();
};

class CakeQdisc : public Qdisc {
  public:
    explicit CakeQdisc(const CakeConfig& cfg, const NatTable* nat = nullptr);

    bool enqueue(Packet pkt, SimTime now) override;
    Out dequeue(SimTime now) override;

    uint64_t backlog_pkts() const override { return total_pkts_; }
    uint64_t backlog_bytes() const override { return total_bytes_; }
    const QdiscStats& stats() const override;

    const CakeConfig& config() const { return cfg_; }
    uint64_t memlimit() const { return memlimit_; }
    SimTime global_t_next() const { return global_clock_.t_next(); }
    int tiers() const { return int(tiers_.size()); }
    const FlowTable& tier_table(int i) const { return tiers_[i].table; }
    uint64_t tier_backlog_pkts(int i) const { return tiers_[i].backlog_pkts; }

    // Test hook: every host refcount in every tier matches a full scan.
    bool debug_refcounts_consistent() const;

  private:
    struct Tier {
        RateFraction fraction;
        uint64_t rate_bps = 0; // 0 when the shaper is off
        SimTime t_next;
        CodelParams cparams;
        FlowTable table;
        std::deque<uint32_t> new_flows;
        std::deque<uint32_t> old_flows;
        uint64_t backlog_pkts = 0;
        uint64_t backlog_bytes = 0;
        int64_t drr_deficit = 0; // tier-level DRR when unshaped
        uint64_t drr_quantum = 0;
        bool in_tier_list = false;

        Tier(const FlowTableConfig& tcfg, uint32_t quantum)
            : table(tcfg, quantum) {}
    };

    struct DodequeueResult {
        bool has = false;
        Packet pkt;
        bool ok_to_drop = false;
    };

    void admit(Packet&& pkt, SimTime now, bool* new_pkt_dropped);
    void drop_packet(Tier& tier, FlowState& flow, Packet&& pkt, DropCause cause);
    Packet pop_head(Tier& tier, FlowState& flow);
    void enforce_memlimit(Tier& home_tier, uint32_t home_flow, bool* new_pkt_dropped);

    int select_tier_shaped(SimTime now) const;
    void advance_tier_clock(Tier& tier, uint32_t adj_len, SimTime now);
    std::optional<Packet> tier_dequeue_inner(Tier& tier, SimTime now);
    DodequeueResult codel_pop(Tier& tier, FlowState& flow, SimTime now);
    std::optional<Packet> codel_dequeue_flow(Tier& tier, FlowState& flow, SimTime now);

    CakeConfig cfg_;
    const NatTable* nat_;
    std::vector<Tier> tiers_;
    ShaperState global_clock_;
    std::deque<int> tier_list_; // unshaped DRR rotation
    uint64_t total_pkts_ = 0;
    uint64_t total_bytes_ = 0;
    uint64_t memlimit_ = 0;
    mutable QdiscStats stats_;
};

// Drop-tail FIFO with a byte limit.
class FifoQdisc : public Qdisc {
  public:
    explicit FifoQdisc(uint64_t byte_limit) : limit_(byte_limit) {}

    bool enqueue(Packet pkt, SimTime now) override;
    Out dequeue(SimTime now) override;
    uint64_t backlog_pkts() const override { return queue_.size(); }
    uint64_t backlog_bytes() const override { return bytes_; }
    const QdiscStats& stats() const override {
        stats_.backlog_pkts = queue_.size();
        stats_.backlog_bytes = bytes_;
        return stats_;
    }

  private:
    uint64_t limit_;
    uint64_t bytes_ = 0;
    std::deque<Packet> queue_;
    mutable QdiscStats stats_;
};

} // namespace cakesim
