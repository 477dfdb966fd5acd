#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cakesim/packet.hpp"
#include "cakesim/time.hpp"

namespace cakesim {

enum class Framing : uint8_t { None, Atm, Ptm };
enum class SplitGso : uint8_t { Off, On, Auto };

struct ShaperConfig {
    uint64_t rate_bps = 0; // 0 disables the shaper
    int32_t overhead = 0;  // signed bytes added to the network-layer size
    Framing framing = Framing::None;
    uint32_t mpu = 0;      // minimum adjusted size, applied before framing
    SplitGso split_gso = SplitGso::Auto;
    uint64_t split_threshold_bps = 1'000'000'000;

    bool enabled() const { return rate_bps > 0; }
    bool should_split() const {
        switch (split_gso) {
            case SplitGso::Off: return false;
            case SplitGso::On: return true;
            case SplitGso::Auto:
                return rate_bps > 0 && rate_bps < split_threshold_bps;
        }
        return false;
    }
};

// On-the-wire size of a packet: network-layer size plus configured
// overhead, then optional ATM (48->53) or PTM (64->65) cell rounding.
// Results below 1 byte clamp to 1; clamp_count, when given, counts those.
uint32_t compute_adjusted_len(uint32_t total_len, uint32_t network_offset,
                              const ShaperConfig& cfg,
                              uint64_t* clamp_count = nullptr);

// Splits an offload aggregate into <= mss payload segments when the
// configuration calls for it; otherwise returns the packet unchanged.
std::vector<Packet> split_aggregate(const Packet& pkt, uint32_t mss,
                                    const ShaperConfig& cfg);

struct DequeueGate {
    bool eligible = false;
    SimTime wait_until; // valid when !eligible
};

// Rate-based virtual transmission clock. The clock advances by the exact
// rational serialisation time of each released packet (accumulated
// remainder, no drift); time_per_byte() reports the rounded per-byte cost.
class ShaperState {
  public:
    ShaperState() = default;
    explicit ShaperState(uint64_t rate_bps) : rate_bps_(rate_bps) {}

    uint64_t rate_bps() const { return rate_bps_; }
    SimTime t_next() const { return t_next_; }

    // Rounded ns/byte at the configured rate.
    int64_t time_per_byte_ns() const {
        if (rate_bps_ == 0) return 0;
        return int64_t((8'000'000'000ull + rate_bps_ / 2) / rate_bps_);
    }

    // Idle reset: a packet entering an empty queue restarts the clock.
    // A stale clock left in the past is also snapped forward, otherwise
    // the accumulated idle credit would release a burst, which is the
    // token-bucket behaviour this shaper exists to avoid.
    void on_enqueue(uint64_t backlog_pkts, SimTime now) {
        if (backlog_pkts == 0 && t_next_ != now) t_next_ = now;
    }

    DequeueGate gate(SimTime now) const {
        if (t_next_ > now) return {false, t_next_};
        return {true, SimTime()};
    }

    // Charge one released packet of on-wire size adj_len.
    void advance(uint32_t adj_len) {
        if (rate_bps_ == 0) return;
        // t_next += adj_len * 8e9 / rate, exactly, carrying the remainder.
        unsigned __int128 num = (unsigned __int128)adj_len * 8'000'000'000ull + rem_;
        uint64_t whole = uint64_t(num / rate_bps_);
        rem_ = uint64_t(num % rate_bps_);
        t_next_ += SimTime::ns(int64_t(whole));
    }

    void reset_to(SimTime t) {
        t_next_ = t;
        rem_ = 0;
    }

  private:
    uint64_t rate_bps_ = 0;
    SimTime t_next_;
    uint64_t rem_ = 0;
};

} // namespace cakesim
