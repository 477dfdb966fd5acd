#include "cakesim/analysis.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace cakesim {

double collision_prob_plain(uint64_t flows, uint64_t queues) {
    assert(queues >= 1);
    if (flows == 0) return 0.0;
    if (queues == 1) return 1.0;
    // 1 - (1 - 1/n)^m, accumulated in log space for large m.
    const double log_miss = double(flows) * std::log1p(-1.0 / double(queues));
    return -std::expm1(log_miss);
}

double collision_prob_setassoc(uint64_t flows, uint64_t queues, uint64_t ways) {
    if (ways == 0 || queues == 0 || queues % ways != 0)
        throw std::invalid_argument("queues must be a positive multiple of ways");
    const uint64_t sets = queues / ways;
    if (flows < ways) return 0.0;
    if (sets == 1) return 1.0;

    // Sum the binomial tail P[X >= k], X ~ B(m, 1/s), in log space.
    const double logp = -std::log(double(sets));
    const double log1mp = std::log1p(-1.0 / double(sets));
    const double m = double(flows);

    // Sum from the smaller tail for accuracy.
    double tail = 0.0;
    for (uint64_t j = ways; j <= flows; ++j) {
        const double lterm = std::lgamma(m + 1) - std::lgamma(double(j) + 1) -
                             std::lgamma(m - double(j) + 1) + double(j) * logp +
                             (m - double(j)) * log1mp;
        const double term = std::exp(lterm);
        tail += term;
        if (term < tail * 1e-18 && j > flows / sets + ways) break;
    }
    return std::min(tail, 1.0);
}

double collision_prob_setassoc_mc(uint64_t flows, uint64_t queues, uint64_t ways,
                                  uint64_t trials, Rng& rng) {
    if (ways == 0 || queues == 0 || queues % ways != 0)
        throw std::invalid_argument("queues must be a positive multiple of ways");
    const uint64_t sets = queues / ways;
    if (sets == 1) return flows >= ways ? 1.0 : 0.0;

    // Each of m flows hits the observed set with probability 1/s;
    // drawing geometric gaps between hits walks the same Bernoulli
    // process in O(hits) per trial.
    const double inv_log_miss = 1.0 / std::log1p(-1.0 / double(sets));
    uint64_t hits = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        uint64_t occupancy = 0;
        uint64_t i = 0;
        while (true) {
            const double u = rng.uniform01();
            i += uint64_t(std::floor(std::log(u) * inv_log_miss)) + 1;
            if (i > flows) break;
            if (++occupancy >= ways) break;
        }
        if (occupancy >= ways) ++hits;
    }
    return double(hits) / double(trials);
}

double collision_prob_plain_mc(uint64_t flows, uint64_t queues, uint64_t trials,
                               Rng& rng) {
    return collision_prob_setassoc_mc(flows, queues, 1, trials, rng);
}

} // namespace cakesim
