#pragma once

#include <cstdint>
#include <map>

#include "qfb/control.hpp"
#include "qfb/rng.hpp"

namespace qfb {

struct SimConfig {
  long long trajectories = 1;
  uint64_t seed = 0;
  bool keep_trajectories = false;  // retain (record, cost) per trajectory
};

struct TrajectoryResult {
  MeasurementRecord record;
  double cost = 0.0;
};

struct SimResult {
  long long n = 0;
  uint64_t seed = 0;
  double mean_risk = 0.0;
  double std_error = 0.0;  // sample stdev / sqrt(n); 0 by convention for n = 1
  std::vector<std::map<int, long long>> outcome_counts;  // per stage, by label
  std::vector<TrajectoryResult> trajectories;            // filled if requested
};

/// One closed-loop trajectory: per stage look up the control, accrue the stage
/// cost, draw the outcome by inverse CDF in outcome order, collapse the state;
/// finish with the terminal cost. Deterministic given the generator state.
TrajectoryResult sample_trajectory(const CompiledScenario& cs, const Strategy& strategy,
                                   const Ket& psi0, SplitMix64& rng);

/// Monte Carlo risk estimate over cfg.trajectories independent trajectories,
/// trajectory i drawing from substream(seed, i). Trajectories run on up to
/// QFB_THREADS workers (0 or unset = hardware concurrency); aggregation is by
/// trajectory index, so results are byte-identical for any thread count.
SimResult estimate_risk(const Scenario& s, const SimConfig& cfg, const Strategy& strategy,
                        const Ket& psi0);

/// Worker cap from QFB_THREADS (0 or unset = auto).
int worker_count();

}  // namespace qfb
