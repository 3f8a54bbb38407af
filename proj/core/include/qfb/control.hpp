#pragma once

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "qfb/dynamics.hpp"
#include "qfb/filter.hpp"

namespace qfb {

/// Feedback strategy over the reachable history tree: one control-grid index
/// per node, children keyed by the stage's outcome label. Terminal leaves
/// carry no decision (control_index = -1). `value` is the cost-to-go the
/// solver computed at the node.
struct TreeStrategyNode {
  int control_index = -1;
  double value = 0.0;
  std::map<int, TreeStrategyNode> children;
};

struct TreeStrategy {
  TreeStrategyNode root;
};

/// Markov feedback for complete measurements: the control of stage k >= 1
/// depends only on stage k-1's outcome; stage 0 has a single unconditional
/// control.
struct TableStrategy {
  int initial_control = 0;
  std::vector<std::map<int, int>> policy;  // policy[k]: stage-k outcome -> control for stage k+1
};

using Strategy = std::variant<TreeStrategy, TableStrategy>;

/// Value function of the complete-measurement DP: cost-to-go tables indexed
/// by the last outcome.
struct ValueTables {
  double initial_value = 0.0;
  std::vector<std::vector<int>> outcome_labels;     // per stage, row order of the tables
  std::vector<std::vector<double>> after_stage;     // after_stage[k][i]: cost-to-go once stage k yielded outcome i
};

struct SolveReport {
  double value = 0.0;
  Strategy strategy;
  long long nodes_expanded = 0;
  double pruned_mass = 0.0;
  std::optional<ValueTables> tables;  // present for the complete-measurement DP
};

/// Finite-horizon Bellman recursion over the reachable posterior tree for a
/// vector initial state. Ties in the minimum go to the lowest grid index;
/// branches at or below the zero-probability floor contribute nothing.
SolveReport bellman_ket(const Scenario& s, const Ket& psi0);

/// Classical finite-horizon DP over outcome labels; requires every stage to
/// carry a complete rank-one measurement. Stages 1..K-1 run on cost-to-go
/// tables over the previous stage's outcome; stage 0 is minimized against the
/// scenario's actual initial state.
SolveReport bellman_complete(const Scenario& s);

/// Exhaustive enumeration of all deterministic non-anticipating strategies,
/// each evaluated by an independent forward pass (no Bellman backup). The
/// correctness oracle for bellman_ket; guarded to at most 10^7 strategies.
SolveReport enumerate_strategies_oracle(const Scenario& s, const Ket& psi0);

/// Expected accumulated cost of a fixed strategy: forward expectation over
/// the outcome tree of per-stage costs plus the terminal cost.
double evaluate_strategy(const Scenario& s, const Strategy& strategy, const Ket& psi0);

}  // namespace qfb
