#pragma once

#include <cassert>
#include <compare>
#include <cstdint>

namespace cakesim {

// Simulation time: integer nanoseconds since simulation start.
// Also used for durations. int64 nanoseconds cover ~292 years, so
// arithmetic on sane simulation inputs cannot wrap; debug builds
// assert on overflow anyway.
class SimTime {
  public:
    constexpr SimTime() = default;

    static constexpr SimTime ns(int64_t v) { return SimTime(v); }
    static constexpr SimTime us(int64_t v) { return SimTime(v * 1000); }
    static constexpr SimTime ms(int64_t v) { return SimTime(v * 1'000'000); }
    static constexpr SimTime sec(int64_t v) { return SimTime(v * 1'000'000'000); }
    static constexpr SimTime seconds_f(double s) {
        return SimTime(static_cast<int64_t>(s * 1e9));
    }

    constexpr int64_t count_ns() const { return ns_; }
    constexpr double to_seconds() const { return static_cast<double>(ns_) * 1e-9; }
    constexpr double to_ms() const { return static_cast<double>(ns_) * 1e-6; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime o) const {
        assert(!add_overflows(ns_, o.ns_));
        return SimTime(ns_ + o.ns_);
    }
    constexpr SimTime operator-(SimTime o) const { return SimTime(ns_ - o.ns_); }
    SimTime& operator+=(SimTime o) { *this = *this + o; return *this; }
    SimTime& operator-=(SimTime o) { *this = *this - o; return *this; }

    constexpr SimTime operator*(int64_t k) const {
        assert(k == 0 || (ns_ * k) / k == ns_);
        return SimTime(ns_ * k);
    }

  private:
    explicit constexpr SimTime(int64_t v) : ns_(v) {}
    static constexpr bool add_overflows(int64_t a, int64_t b) {
        return (b > 0 && a > INT64_MAX - b) || (b < 0 && a < INT64_MIN - b);
    }

    int64_t ns_ = 0;
};

} // namespace cakesim
