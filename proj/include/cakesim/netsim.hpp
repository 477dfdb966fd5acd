#pragma once

#include "cakesim/metrics.hpp"
#include "cakesim/scenario.hpp"

namespace cakesim {

// Builds the two-sided topology described by the scenario, runs the
// event loop for the configured duration and returns the metrics log.
// Deterministic for a given scenario + seed.
MetricsLog run_scenario(const ScenarioConfig& cfg);

} // namespace cakesim
