#pragma once

#include <vector>

#include "qfb/dynamics.hpp"

namespace qfb {

/// One outcome label per stage, in chronological order.
using MeasurementRecord = std::vector<int>;

struct FilteredTrajectory {
  std::vector<std::variant<Ket, DensityOperator>> states;  // posterior after each stage
  std::vector<double> stage_probs;                         // conditional, per stage
  double probability = 1.0;                                // joint probability of the record
};

/// Propagates the a posteriori state along `record`, one stage instrument per
/// entry, with `controls[k]` applied in stage k. Vector initial states stay
/// vectors; mixed ones evolve as densities.
FilteredTrajectory filter_trajectory(const Scenario& s, const std::vector<ControlVector>& controls,
                                     const MeasurementRecord& record);

/// Classical Markov kernel of the outcome chain for complete (rank-one)
/// measurements: entry (v, v') is the probability that stage k+1 yields v'
/// given stage k yielded v, one row-stochastic matrix per control in stage
/// k+1's grid. Valid for k in [0, K-2].
struct TransitionKernel {
  int stage = 0;                       // source stage index k
  std::vector<int> source_outcomes;    // stage k labels (row order)
  std::vector<int> target_outcomes;    // stage k+1 labels (column order)
  std::vector<RealMatrix> matrices;    // per control in stage k+1's grid
};

TransitionKernel complete_measurement_kernel(const Scenario& s, int k);

/// True iff stage k's measurement consists of d rank-one projectors.
bool is_complete_measurement(const Scenario& s, int k);

/// Unit eigenvectors of stage k's rank-one projectors, in outcome order.
/// Throws NotCompleteMeasurementError if the stage is not complete.
std::vector<ComplexVector> measurement_basis(const Scenario& s, int k);

struct CkReport {
  double max_residual = 0.0;
  bool pass = false;
};

/// Chapman-Kolmogorov check: for each consecutive kernel pair, the matrix
/// product under the fixed controls must match the two-stage kernel built
/// independently from the composed instrument, aggregating composite outcomes
/// by their final coordinate. `control_indices[k]` selects the control used
/// in stage k's grid (entries for stages covered by the kernels are used).
CkReport verify_chapman_kolmogorov(const Scenario& s, const std::vector<TransitionKernel>& kernels,
                                   const std::vector<int>& control_indices);

struct PosteriorNode {
  MeasurementRecord prefix;
  Ket state;
  double probability;                  // cumulative from the root
  std::vector<PosteriorNode> children; // depth-first, in outcome order
};

struct PosteriorTree {
  PosteriorNode root;
  double pruned_mass = 0.0;   // total probability discarded below the floor
  long long node_count = 0;
};

/// Enumerates every measurement record with all prefix probabilities above the
/// zero-probability floor, starting from `state` at stage `from_stage`, with a
/// fixed control per stage (controls.size() == K - from_stage).
PosteriorTree reachable_posteriors(const Scenario& s, int from_stage, const Ket& state,
                                   const std::vector<ControlVector>& controls);

}  // namespace qfb
