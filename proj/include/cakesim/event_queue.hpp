#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "cakesim/time.hpp"

namespace cakesim {

// Time-ordered event queue. Ties execute in insertion order, so a run is
// deterministic replayable.
class EventQueue {
  public:
    using Action = std::function<void()>;

    SimTime now() const { return now_; }

    void schedule(SimTime at, Action fn) {
        if (at < now_) at = now_;
        heap_.push(Entry{at, seq_++, std::move(fn)});
    }
    void schedule_in(SimTime delay, Action fn) { schedule(now_ + delay, std::move(fn)); }

    bool empty() const { return heap_.empty(); }
    size_t pending() const { return heap_.size(); }

    // Runs events with timestamp <= end, then sets now to end.
    void run_until(SimTime end) {
        while (!heap_.empty() && heap_.top().at <= end) {
            Entry e = std::move(const_cast<Entry&>(heap_.top()));
            heap_.pop();
            now_ = e.at;
            e.fn();
        }
        now_ = end;
    }

  private:
    struct Entry {
        SimTime at;
        uint64_t seq;
        Action fn;
        bool operator>(const Entry& o) const {
            if (at != o.at) return at > o.at;
            return seq > o.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
    SimTime now_;
    uint64_t seq_ = 0;
};

} // namespace cakesim
