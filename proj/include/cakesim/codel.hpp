#pragma once

#include <cstdint>

#include "cakesim/time.hpp"

namespace cakesim {

struct CodelParams {
    SimTime target = SimTime::ms(5);
    SimTime interval = SimTime::ms(100);
    uint32_t mtu = 1514; // no drops while a queue holds less than one MTU
};

// Per-queue CoDel AQM state. Control law: after each drop the next drop
// is scheduled interval/sqrt(count) later.
struct CodelState {
    SimTime first_above_time; // 0 = sojourn not persistently above target
    SimTime drop_next;
    uint32_t count = 0;
    uint32_t lastcount = 0;
    bool dropping = false;
};

SimTime codel_control_law(SimTime t, SimTime interval, uint32_t count);

} // namespace cakesim
