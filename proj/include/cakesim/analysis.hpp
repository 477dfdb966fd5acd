#pragma once

#include <cstdint>

#include "cakesim/rng.hpp"

namespace cakesim {

// Probability that a new flow lands in a bucket already occupied by at
// least one of m uniformly hashed flows: 1 - (1 - 1/n)^m.
double collision_prob_plain(uint64_t flows, uint64_t queues);

// Set-associative variant: n/k sets of k ways each; the new flow
// collides only when its set already holds >= k flows.
// P[Binomial(m, k/n) >= k], evaluated in log space.
double collision_prob_setassoc(uint64_t flows, uint64_t queues, uint64_t ways);

// Process-level Monte Carlo estimate of the same probability: samples
// the occupancy of the new flow's set by drawing geometric gaps between
// hits, without touching the binomial closed form.
double collision_prob_setassoc_mc(uint64_t flows, uint64_t queues, uint64_t ways,
                                  uint64_t trials, Rng& rng);

double collision_prob_plain_mc(uint64_t flows, uint64_t queues, uint64_t trials,
                               Rng& rng);

} // namespace cakesim
