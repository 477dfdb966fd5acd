#include "cakesim/qdisc.hpp"

#include <cassert>
#include <cmath>

#include "cakesim/nat.hpp"

namespace cakesim {

namespace {

// Serialisation time of adj_len bytes at rate_bps, rounded to ns.
SimTime bytes_time(uint64_t rate_bps, uint64_t adj_len) {
    unsigned __int128 num = (unsigned __int128)adj_len * 8'000'000'000ull;
    return SimTime::ns(int64_t((num + rate_bps / 2) / rate_bps));
}

} // namespace

SimTime codel_control_law(SimTime t, SimTime interval, uint32_t count) {
    double step = double(interval.count_ns()) / std::sqrt(double(count));
    return t + SimTime::ns(int64_t(step));
}

CakeConfig CakeConfig::fq_codel_preset() {
    CakeConfig cfg;
    cfg.shaper = ShaperConfig{};
    cfg.diffserv = DiffServMode::BestEffort;
    cfg.isolation = IsolationMode::FlowOnly;
    cfg.key_mode = FlowKeyMode::FiveTuple;
    cfg.ack_filter = AckFilterMode::Off;
    cfg.ways = 1; // plain hashing into 1024 queues
    return cfg;
}

CakeQdisc::CakeQdisc(const CakeConfig& cfg, const NatTable* nat)
    : cfg_(cfg), nat_(nat), global_clock_(cfg.shaper.rate_bps) {
    const int n = tier_count(cfg_.diffserv);
    auto fractions = tier_fractions(cfg_.diffserv);

    FlowTableConfig tcfg;
    tcfg.total_queues = cfg_.total_queues;
    tcfg.ways = cfg_.key_mode == FlowKeyMode::Blind ? 1 : cfg_.ways;
    tcfg.host_buckets = cfg_.host_buckets;
    tcfg.isolation =
        cfg_.key_mode == FlowKeyMode::Blind ? IsolationMode::FlowOnly : cfg_.isolation;
    tcfg.key_mode = cfg_.key_mode;
    tcfg.nat_aware = cfg_.nat_aware;
    tcfg.salt = cfg_.salt;

    uint32_t lcd = 1;
    for (const auto& f : fractions) lcd = std::max(lcd, f.den);

    tiers_.reserve(n);
    for (int i = 0; i < n; ++i) {
        tiers_.emplace_back(tcfg, cfg_.quantum);
        Tier& t = tiers_.back();
        t.fraction = fractions[i];
        if (cfg_.shaper.enabled()) {
            unsigned __int128 r =
                (unsigned __int128)cfg_.shaper.rate_bps * t.fraction.num / t.fraction.den;
            t.rate_bps = uint64_t(r);
            if (t.rate_bps == 0) t.rate_bps = 1;
        }
        t.drr_quantum =
            uint64_t(t.fraction.num) * (lcd / t.fraction.den) * cfg_.quantum;

        // AQM constants scale with the tier rate so that one MTU of
        // serialisation does not read as standing queue at low rates.
        t.cparams.target = cfg_.target;
        t.cparams.interval = cfg_.interval;
        t.cparams.mtu = 1514;
        if (t.rate_bps > 0) {
            SimTime mtu_t = bytes_time(t.rate_bps, t.cparams.mtu);
            SimTime scaled = SimTime::ns(mtu_t.count_ns() * 3 / 2);
            if (scaled > t.cparams.target) t.cparams.target = scaled;
            SimTime min_interval = SimTime::ns(t.cparams.target.count_ns() * 4);
            if (min_interval > t.cparams.interval) t.cparams.interval = min_interval;
        }
    }

    if (cfg_.memlimit > 0) {
        memlimit_ = cfg_.memlimit;
    } else {
        // 4 MB, or 15x the bandwidth-delay product at the configured
        // rate with the AQM interval standing in for the path RTT.
        uint64_t bdp =
            cfg_.shaper.rate_bps / 8 * uint64_t(cfg_.interval.count_ns()) / 1'000'000'000ull;
        memlimit_ = std::max<uint64_t>(4 * 1024 * 1024, 15 * bdp);
    }

    stats_.tier_tx_bytes.assign(n, 0);
    stats_.tier_tx_pkts.assign(n, 0);
}

bool CakeQdisc::enqueue(Packet pkt, SimTime now) {
    bool new_pkt_dropped = false;
    if (pkt.is_aggregate()) {
        auto segments = split_aggregate(pkt, pkt.gso_seg_size, cfg_.shaper);
        for (auto& seg : segments) admit(std::move(seg), now, &new_pkt_dropped);
    } else {
        admit(std::move(pkt), now, &new_pkt_dropped);
    }
    return !new_pkt_dropped;
}

void CakeQdisc::admit(Packet&& pkt, SimTime now, bool* new_pkt_dropped) {
    pkt.adj_len =
        compute_adjusted_len(pkt.total_len, pkt.network_offset, cfg_.shaper,
                             &stats_.adj_clamped);
    pkt.enqueue_time = now;

    const int ti = classify_dscp(pkt.dscp, cfg_.diffserv);
    Tier& tier = tiers_[ti];

    const FlowKey key = tier.table.packet_key(pkt, nat_);
    const FlowLookup lk = tier.table.lookup_or_allocate(tier.table.flow_hash(key));
    if (lk.collision) stats_.collisions++;
    FlowState& flow = tier.table.flow(lk.index);

    const bool qdisc_was_empty = (total_pkts_ == 0);
    const bool tier_was_empty = (tier.backlog_pkts == 0);

    flow.queue.push_back(pkt);
    flow.queued_bytes += pkt.total_len;
    tier.backlog_pkts++;
    tier.backlog_bytes += pkt.total_len;
    total_pkts_++;
    total_bytes_ += pkt.total_len;
    stats_.enq_pkts++;
    stats_.enq_bytes += pkt.total_len;

    if (!flow.active) {
        tier.table.activate(flow, key);
        flow.deficit = tier.table.scaled_quantum(flow);
    }
    if (flow.membership == ListMembership::None) {
        tier.new_flows.push_back(lk.index);
        flow.membership = ListMembership::New;
    }
    if (!tier.in_tier_list) {
        tier_list_.push_back(ti);
        tier.in_tier_list = true;
        tier.drr_deficit = 0;
    }

    // The filter may remove one previously queued ACK, never the new
    // packet.
    if (cfg_.ack_filter != AckFilterMode::Off) {
        if (auto victim = filter_on_enqueue(flow.queue, cfg_.ack_filter)) {
            Packet dropped = std::move(flow.queue[*victim]);
            flow.queue.erase(flow.queue.begin() + long(*victim));
            flow.queued_bytes -= dropped.total_len;
            tier.backlog_pkts--;
            tier.backlog_bytes -= dropped.total_len;
            total_pkts_--;
            total_bytes_ -= dropped.total_len;
            stats_.drop_pkts[size_t(DropCause::AckFilter)]++;
            stats_.drop_bytes[size_t(DropCause::AckFilter)] += dropped.total_len;
            report_drop(dropped, DropCause::AckFilter);
        }
    }

    if (cfg_.shaper.enabled()) {
        global_clock_.on_enqueue(qdisc_was_empty ? 0 : 1, now);
        // Each tier clock restarts like the global one when its queue
        // transitions from empty: idle credit and borrowing debt are
        // both forgiven.
        if (tier_was_empty) tier.t_next = now;
    }

    enforce_memlimit(tier, lk.index, new_pkt_dropped);
}

void CakeQdisc::enforce_memlimit(Tier& home_tier, uint32_t home_flow,
                                 bool* new_pkt_dropped) {
    while (total_bytes_ > memlimit_ && total_pkts_ > 0) {
        Tier* fat_tier = nullptr;
        FlowState* fat_flow = nullptr;
        uint64_t fat_bytes = 0;
        for (auto& t : tiers_) {
            if (t.backlog_pkts == 0) continue;
            for (uint32_t i = 0; i < t.table.flow_count(); ++i) {
                FlowState& f = t.table.flow(i);
                if (f.queued_bytes > fat_bytes) {
                    fat_bytes = f.queued_bytes;
                    fat_flow = &f;
                    fat_tier = &t;
                }
            }
        }
        if (!fat_flow) break;
        if (fat_tier == &home_tier && fat_flow == &home_tier.table.flow(home_flow) &&
            fat_flow->queue.size() == 1) {
            *new_pkt_dropped = true;
        }
        Packet victim = pop_head(*fat_tier, *fat_flow);
        stats_.drop_pkts[size_t(DropCause::Overlimit)]++;
        stats_.drop_bytes[size_t(DropCause::Overlimit)] += victim.total_len;
        report_drop(victim, DropCause::Overlimit);
    }
}

Packet CakeQdisc::pop_head(Tier& tier, FlowState& flow) {
    assert(!flow.queue.empty());
    Packet pkt = std::move(flow.queue.front());
    flow.queue.pop_front();
    flow.queued_bytes -= pkt.total_len;
    tier.backlog_pkts--;
    tier.backlog_bytes -= pkt.total_len;
    total_pkts_--;
    total_bytes_ -= pkt.total_len;
    return pkt;
}

int CakeQdisc::select_tier_shaped(SimTime now) const {
    const bool strict = cfg_.diffserv == DiffServMode::Diffserv8Strict;
    int borrow = -1;
    SimTime borrow_t;
    for (int i = int(tiers_.size()) - 1; i >= 0; --i) {
        const Tier& t = tiers_[i];
        if (t.backlog_pkts == 0) continue;
        if (strict || t.t_next <= now) return i;
        if (borrow < 0 || t.t_next < borrow_t) {
            borrow = i;
            borrow_t = t.t_next;
        }
    }
    return borrow; // earliest-scheduled non-empty tier, or -1 if all empty
}

void CakeQdisc::advance_tier_clock(Tier& tier, uint32_t adj_len, SimTime now) {
    if (tier.rate_bps == 0) return;
    const SimTime dur = bytes_time(tier.rate_bps, adj_len);
    if (tier.t_next < now) {
        tier.t_next += dur; // catching up: keep residual credit
    } else if (tier.t_next < now + dur) {
        tier.t_next = now + dur;
    }
    // Already more than one packet ahead: this is a borrowed
    // transmission, and the debt stays capped so the tier is not
    // starved once contention returns.
}

CakeQdisc::DodequeueResult CakeQdisc::codel_pop(Tier& tier, FlowState& flow,
                                                SimTime now) {
    DodequeueResult r;
    if (flow.queue.empty()) {
        flow.codel.first_above_time = SimTime();
        return r;
    }
    r.pkt = pop_head(tier, flow);
    r.has = true;

    const SimTime sojourn = now - r.pkt.enqueue_time;
    const CodelParams& cp = tier.cparams;
    if (sojourn < cp.target || flow.queued_bytes <= cp.mtu) {
        flow.codel.first_above_time = SimTime();
    } else if (flow.codel.first_above_time == SimTime()) {
        flow.codel.first_above_time = now + cp.interval;
    } else if (now >= flow.codel.first_above_time) {
        r.ok_to_drop = true;
    }
    return r;
}

std::optional<Packet> CakeQdisc::codel_dequeue_flow(Tier& tier, FlowState& flow,
                                                    SimTime now) {
    CodelState& cs = flow.codel;
    DodequeueResult r = codel_pop(tier, flow, now);
    if (!r.has) {
        cs.dropping = false;
        return std::nullopt;
    }

    if (cs.dropping) {
        if (!r.ok_to_drop) {
            cs.dropping = false;
        } else {
            while (cs.dropping && now >= cs.drop_next) {
                drop_packet(tier, flow, std::move(r.pkt), DropCause::Codel);
                cs.count++;
                r = codel_pop(tier, flow, now);
                if (!r.has) {
                    cs.dropping = false;
                    return std::nullopt;
                }
                if (!r.ok_to_drop) {
                    cs.dropping = false;
                } else {
                    cs.drop_next = codel_control_law(cs.drop_next, tier.cparams.interval,
                                                     cs.count);
                }
            }
        }
    } else if (r.ok_to_drop) {
        drop_packet(tier, flow, std::move(r.pkt), DropCause::Codel);
        r = codel_pop(tier, flow, now);
        if (!r.has) {
            cs.dropping = false;
            return std::nullopt;
        }
        cs.dropping = true;
        // Resume near the previous drop rate if we were dropping
        // recently, otherwise restart the control law.
        const uint32_t delta = cs.count - cs.lastcount;
        if (delta > 1 && now - cs.drop_next < SimTime::ns(16 * tier.cparams.interval.count_ns())) {
            cs.count = delta;
        } else {
            cs.count = 1;
        }
        cs.drop_next = codel_control_law(now, tier.cparams.interval, cs.count);
        cs.lastcount = cs.count;
    }
    return std::move(r.pkt);
}

void CakeQdisc::drop_packet(Tier&, FlowState&, Packet&& pkt, DropCause cause) {
    stats_.drop_pkts[size_t(cause)]++;
    stats_.drop_bytes[size_t(cause)] += pkt.total_len;
    report_drop(pkt, cause);
}

std::optional<Packet> CakeQdisc::tier_dequeue_inner(Tier& tier, SimTime now) {
    for (;;) {
        bool from_new;
        uint32_t fi;
        if (!tier.new_flows.empty()) {
            fi = tier.new_flows.front();
            from_new = true;
        } else if (!tier.old_flows.empty()) {
            fi = tier.old_flows.front();
            from_new = false;
        } else {
            return std::nullopt;
        }
        FlowState& flow = tier.table.flow(fi);

        if (flow.deficit < 0) {
            flow.deficit += tier.table.scaled_quantum(flow);
            (from_new ? tier.new_flows : tier.old_flows).pop_front();
            tier.old_flows.push_back(fi);
            flow.membership = ListMembership::Old;
            continue;
        }

        auto pkt = codel_dequeue_flow(tier, flow, now);
        if (!pkt) {
            // Queue empty at its visit: new flows get one more round on
            // the old list, old flows retire.
            if (from_new) {
                tier.new_flows.pop_front();
                tier.old_flows.push_back(fi);
                flow.membership = ListMembership::Old;
            } else {
                tier.old_flows.pop_front();
                flow.membership = ListMembership::None;
                if (flow.active) tier.table.deactivate(flow);
            }
            continue;
        }

        flow.deficit -= pkt->adj_len;
        return pkt;
    }
}

Qdisc::Out CakeQdisc::dequeue(SimTime now) {
    for (;;) {
        if (total_pkts_ == 0) return {};

        if (cfg_.shaper.enabled()) {
            const DequeueGate gate = global_clock_.gate(now);
            if (!gate.eligible) return {std::nullopt, gate.wait_until};

            const int ti = select_tier_shaped(now);
            if (ti < 0) return {};
            Tier& tier = tiers_[ti];
            auto pkt = tier_dequeue_inner(tier, now);
            if (!pkt) continue; // tier drained by AQM drops; reselect

            global_clock_.advance(pkt->adj_len);
            advance_tier_clock(tier, pkt->adj_len, now);
            stats_.tx_pkts++;
            stats_.tx_bytes += pkt->total_len;
            stats_.tier_tx_bytes[ti] += pkt->adj_len;
            stats_.tier_tx_pkts[ti]++;
            return {std::move(pkt), std::nullopt};
        }

        // Shaper off: weighted DRR over the tiers, work-conserving.
        if (tier_list_.empty()) return {};
        const int ti = tier_list_.front();
        Tier& tier = tiers_[ti];
        if (tier.backlog_pkts == 0) {
            tier_list_.pop_front();
            tier.in_tier_list = false;
            continue;
        }
        if (tier.drr_deficit < 0) {
            tier.drr_deficit += int64_t(tier.drr_quantum);
            tier_list_.pop_front();
            tier_list_.push_back(ti);
            continue;
        }
        auto pkt = tier_dequeue_inner(tier, now);
        if (!pkt) continue;
        tier.drr_deficit -= pkt->adj_len;
        stats_.tx_pkts++;
        stats_.tx_bytes += pkt->total_len;
        stats_.tier_tx_bytes[ti] += pkt->adj_len;
        stats_.tier_tx_pkts[ti]++;
        return {std::move(pkt), std::nullopt};
    }
}

const QdiscStats& CakeQdisc::stats() const {
    uint64_t coll = 0;
    for (const auto& t : tiers_) coll += t.table.collisions();
    stats_.collisions = coll;
    stats_.backlog_pkts = total_pkts_;
    stats_.backlog_bytes = total_bytes_;
    return stats_;
}

bool CakeQdisc::debug_refcounts_consistent() const {
    for (const auto& t : tiers_)
        if (!t.table.refcounts_consistent()) return false;
    return true;
}

bool FifoQdisc::enqueue(Packet pkt, SimTime now) {
    pkt.enqueue_time = now;
    pkt.adj_len = pkt.total_len;
    if (bytes_ + pkt.total_len > limit_) {
        stats_.drop_pkts[size_t(DropCause::Tail)]++;
        stats_.drop_bytes[size_t(DropCause::Tail)] += pkt.total_len;
        report_drop(pkt, DropCause::Tail);
        return false;
    }
    bytes_ += pkt.total_len;
    stats_.enq_pkts++;
    stats_.enq_bytes += pkt.total_len;
    queue_.push_back(std::move(pkt));
    return true;
}

Qdisc::Out FifoQdisc::dequeue(SimTime) {
    if (queue_.empty()) return {};
    Packet pkt = std::move(queue_.front());
    queue_.pop_front();
    bytes_ -= pkt.total_len;
    stats_.tx_pkts++;
    stats_.tx_bytes += pkt.total_len;
    return {std::move(pkt), std::nullopt};
}

} // namespace cakesim
