#include "qfb/control.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qfb {

namespace {

double terminal_expectation(const Scenario& s, const Ket& psi) {
  return expect(psi.amplitudes(), s.terminal.matrix(), s.tol);
}

struct BellmanResult {
  double value = 0.0;
  double pruned = 0.0;  // probability mass below the floor, conditional on this node
  TreeStrategyNode node;
};

struct BellmanContext {
  const CompiledScenario& cs;
  long long nodes_expanded = 0;
};

BellmanResult bellman_node(BellmanContext& ctx, int k, const Ket& psi) {
  const Scenario& s = ctx.cs.scenario();
  ++ctx.nodes_expanded;

  BellmanResult result;
  if (k == s.num_stages()) {
    result.value = terminal_expectation(s, psi);
    result.node.value = result.value;
    return result;
  }

  const CompiledStage& stage = ctx.cs.stage(k);
  double best_value = std::numeric_limits<double>::infinity();
  double best_pruned = 0.0;
  std::map<int, TreeStrategyNode> best_children;
  int best_control = -1;

  for (size_t ui = 0; ui < stage.instruments.size(); ++ui) {
    const Instrument& ins = stage.instruments[ui];
    double total = expect(psi.amplitudes(), stage.costs[ui].matrix(), s.tol);
    double pruned = 0.0;
    std::map<int, TreeStrategyNode> children;
    const OutcomeDistribution dist = outcome_probabilities(ins, psi);
    for (size_t i = 0; i < dist.probabilities.size(); ++i) {
      const double p = dist.probabilities[i];
      if (p <= s.tol.zero_probability_floor) {
        pruned += p;
        continue;
      }
      BellmanResult child = bellman_node(ctx, k + 1, posterior_ket_by_index(ins, psi, i));
      total += p * child.value;
      pruned += p * child.pruned;
      children.emplace(ins.outcome(i).parts.front(), std::move(child.node));
    }
    if (total < best_value) {  // ties keep the lowest grid index
      best_value = total;
      best_pruned = pruned;
      best_children = std::move(children);
      best_control = static_cast<int>(ui);
    }
  }

  result.value = best_value;
  result.pruned = best_pruned;
  result.node.control_index = best_control;
  result.node.value = best_value;
  result.node.children = std::move(best_children);
  return result;
}

}  // namespace

SolveReport bellman_ket(const Scenario& s, const Ket& psi0) {
  if (psi0.dim() != s.dim) throw DimensionError("bellman_ket: initial state dimension mismatch");
  for (int k = 0; k < s.num_stages(); ++k) {
    if (s.stages[static_cast<size_t>(k)].control_grid.empty()) {
      throw ConfigError("bellman_ket: empty control grid", "stages/" + std::to_string(k));
    }
  }
  const CompiledScenario cs(s);
  BellmanContext ctx{cs};
  BellmanResult root = bellman_node(ctx, 0, psi0);

  SolveReport report;
  report.value = root.value;
  report.strategy = TreeStrategy{std::move(root.node)};
  report.nodes_expanded = ctx.nodes_expanded;
  report.pruned_mass = root.pruned;
  return report;
}

SolveReport bellman_complete(const Scenario& s) {
  const int num_stages = s.num_stages();
  for (int k = 0; k < num_stages; ++k) {
    if (s.stages[static_cast<size_t>(k)].control_grid.empty()) {
      throw ConfigError("bellman_complete: empty control grid", "stages/" + std::to_string(k));
    }
  }

  SolveReport report;
  report.tables = ValueTables{};
  if (num_stages == 0) {
    const DensityOperator rho = s.initial_density();
    report.value = expect(rho, s.terminal, s.tol);
    report.strategy = TableStrategy{};
    report.tables->initial_value = report.value;
    report.nodes_expanded = 1;
    return report;
  }

  std::vector<std::vector<ComplexVector>> basis(static_cast<size_t>(num_stages));
  std::vector<std::vector<int>> labels(static_cast<size_t>(num_stages));
  for (int k = 0; k < num_stages; ++k) {
    basis[static_cast<size_t>(k)] = measurement_basis(s, k);
    for (const Projector& e : s.stages[static_cast<size_t>(k)].measurement) {
      labels[static_cast<size_t>(k)].push_back(e.label());
    }
  }

  const CompiledScenario cs(s);
  long long expanded = 0;

  // Terminal table, then backward over outcome tables (Markov chain on the
  // last outcome), then the head minimization from the actual initial state.
  std::vector<std::vector<double>> after(static_cast<size_t>(num_stages));
  const auto& last_basis = basis[static_cast<size_t>(num_stages - 1)];
  for (const ComplexVector& v : last_basis) {
    after[static_cast<size_t>(num_stages - 1)].push_back(
        expect(v, s.terminal.matrix(), s.tol));
  }

  TableStrategy strategy;
  strategy.policy.resize(static_cast<size_t>(std::max(0, num_stages - 1)));
  for (int k = num_stages - 2; k >= 0; --k) {
    const auto& src = basis[static_cast<size_t>(k)];
    const auto& dst = basis[static_cast<size_t>(k + 1)];
    const CompiledStage& next = cs.stage(k + 1);
    std::vector<double> table(src.size());
    for (size_t i = 0; i < src.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_u = -1;
      for (size_t ui = 0; ui < next.instruments.size(); ++ui) {
        ++expanded;
        double total = expect(src[i], next.costs[ui].matrix(), s.tol);
        const ComplexVector evolved = next.propagators[ui] * src[i];
        for (size_t j = 0; j < dst.size(); ++j) {
          total += std::norm(dst[j].dot(evolved)) * after[static_cast<size_t>(k + 1)][j];
        }
        if (total < best) {
          best = total;
          best_u = static_cast<int>(ui);
        }
      }
      table[i] = best;
      strategy.policy[static_cast<size_t>(k)][labels[static_cast<size_t>(k)][i]] = best_u;
    }
    after[static_cast<size_t>(k)] = std::move(table);
  }

  // Head: stage 0 sees the scenario's initial state, not an outcome.
  const DensityOperator rho0 = s.initial_density();
  const CompiledStage& head = cs.stage(0);
  double best = std::numeric_limits<double>::infinity();
  int best_u = -1;
  for (size_t ui = 0; ui < head.instruments.size(); ++ui) {
    ++expanded;
    double total = expect(rho0, head.costs[ui], s.tol);
    const ComplexMatrix evolved =
        head.propagators[ui] * rho0.matrix() * head.propagators[ui].adjoint();
    const auto& b0 = basis[0];
    for (size_t j = 0; j < b0.size(); ++j) {
      const double p = (b0[j].adjoint() * evolved * b0[j]).value().real();
      total += p * after[0][j];
    }
    if (total < best) {
      best = total;
      best_u = static_cast<int>(ui);
    }
  }
  strategy.initial_control = best_u;

  report.value = best;
  report.strategy = std::move(strategy);
  report.nodes_expanded = expanded;
  report.tables->initial_value = best;
  report.tables->outcome_labels = labels;
  report.tables->after_stage = std::move(after);
  return report;
}

namespace {

// Arena of history nodes over alternating (control, outcome) branches. Built
// once; every candidate strategy is then evaluated by a pure table walk.
struct PathBranch {
  double stage_cost = 0.0;             // <psi|S_k(u)|psi> at this node
  std::vector<double> probs;           // conditional outcome probabilities
  std::vector<int> child;              // arena index per outcome, -1 if pruned
};

struct PathNode {
  std::vector<PathBranch> branches;    // one per control in the stage grid
  double terminal_value = 0.0;         // only meaningful at depth K
};

struct OracleWalk {
  const CompiledScenario& cs;
  std::vector<PathNode> arena;

  int build(const Ket& psi, int k) {
    const Scenario& s = cs.scenario();
    PathNode node;
    const int index = static_cast<int>(arena.size());
    arena.push_back(node);
    if (k == s.num_stages()) {
      arena[static_cast<size_t>(index)].terminal_value =
          expect(psi.amplitudes(), s.terminal.matrix(), s.tol);
      return index;
    }
    const CompiledStage& stage = cs.stage(k);
    std::vector<PathBranch> branches;
    branches.reserve(stage.instruments.size());
    for (size_t ui = 0; ui < stage.instruments.size(); ++ui) {
      const Instrument& ins = stage.instruments[ui];
      PathBranch branch;
      branch.stage_cost = expect(psi.amplitudes(), stage.costs[ui].matrix(), s.tol);
      const OutcomeDistribution dist = outcome_probabilities(ins, psi);
      branch.probs = dist.probabilities;
      branch.child.assign(dist.probabilities.size(), -1);
      for (size_t i = 0; i < dist.probabilities.size(); ++i) {
        if (dist.probabilities[i] <= s.tol.zero_probability_floor) continue;
        branch.child[i] = build(posterior_ket_by_index(ins, psi, i), k + 1);
      }
      branches.push_back(std::move(branch));
    }
    arena[static_cast<size_t>(index)].branches = std::move(branches);
    return index;
  }
};

// Decision nodes are record prefixes laid out stage-major, lexicographic
// within a stage. digit_offset[k] locates a stage's block in the assignment.
struct DecisionLayout {
  std::vector<long long> offsets;        // per stage
  std::vector<long long> counts;         // nodes per stage
  std::vector<int> grid_sizes;           // |U_k|
  std::vector<int> outcome_counts;       // |V_k|
  long long total = 0;
};

DecisionLayout layout_decisions(const Scenario& s) {
  DecisionLayout layout;
  long long nodes = 1;
  double log10_strategies = 0.0;
  for (int k = 0; k < s.num_stages(); ++k) {
    const StageSpec& st = s.stages[static_cast<size_t>(k)];
    layout.offsets.push_back(layout.total);
    layout.counts.push_back(nodes);
    layout.grid_sizes.push_back(static_cast<int>(st.control_grid.size()));
    layout.outcome_counts.push_back(static_cast<int>(st.measurement.size()));
    layout.total += nodes;
    log10_strategies += static_cast<double>(nodes) *
                        std::log10(static_cast<double>(st.control_grid.size()));
    if (nodes > (1LL << 40) / std::max(1, static_cast<int>(st.measurement.size()))) {
      throw OracleTooLargeError("enumerate_strategies_oracle: history tree too large");
    }
    nodes *= static_cast<long long>(st.measurement.size());
    if (log10_strategies > 7.0) {
      std::ostringstream os;
      os << "enumerate_strategies_oracle: about 10^" << log10_strategies
         << " strategies exceed the 10^7 guard";
      throw OracleTooLargeError(os.str());
    }
  }
  return layout;
}

double walk_strategy(const OracleWalk& walk, const DecisionLayout& layout,
                     const std::vector<int>& digits, int node_index, int k,
                     long long prefix_index, double prob, double* pruned) {
  const PathNode& node = walk.arena[static_cast<size_t>(node_index)];
  if (k == static_cast<int>(layout.offsets.size())) {
    return prob * node.terminal_value;
  }
  const int u = digits[static_cast<size_t>(layout.offsets[static_cast<size_t>(k)] + prefix_index)];
  const PathBranch& branch = node.branches[static_cast<size_t>(u)];
  double acc = prob * branch.stage_cost;
  for (size_t v = 0; v < branch.probs.size(); ++v) {
    if (branch.child[v] < 0) {
      if (pruned) *pruned += prob * branch.probs[v];
      continue;
    }
    acc += walk_strategy(walk, layout, digits, branch.child[v], k + 1,
                         prefix_index * layout.outcome_counts[static_cast<size_t>(k)] +
                             static_cast<long long>(v),
                         prob * branch.probs[v], pruned);
  }
  return acc;
}

// Rebuilds the winning assignment as a reachable-history tree, children keyed
// by outcome label like the Bellman solver's output.
TreeStrategyNode strategy_tree_from_digits(const OracleWalk& walk, const DecisionLayout& layout,
                                           const std::vector<int>& digits, int node_index, int k,
                                           long long prefix_index) {
  const PathNode& node = walk.arena[static_cast<size_t>(node_index)];
  TreeStrategyNode out;
  if (k == static_cast<int>(layout.offsets.size())) {
    out.value = node.terminal_value;
    return out;
  }
  const StageSpec& stage = walk.cs.scenario().stages[static_cast<size_t>(k)];
  const int u = digits[static_cast<size_t>(layout.offsets[static_cast<size_t>(k)] + prefix_index)];
  out.control_index = u;
  const PathBranch& branch = node.branches[static_cast<size_t>(u)];
  double acc = branch.stage_cost;
  for (size_t v = 0; v < branch.probs.size(); ++v) {
    if (branch.child[v] < 0) continue;
    TreeStrategyNode child = strategy_tree_from_digits(
        walk, layout, digits, branch.child[v], k + 1,
        prefix_index * layout.outcome_counts[static_cast<size_t>(k)] + static_cast<long long>(v));
    acc += branch.probs[v] * child.value;
    out.children.emplace(stage.measurement[v].label(), std::move(child));
  }
  out.value = acc;
  return out;
}

}  // namespace

SolveReport enumerate_strategies_oracle(const Scenario& s, const Ket& psi0) {
  if (psi0.dim() != s.dim) {
    throw DimensionError("enumerate_strategies_oracle: initial state dimension mismatch");
  }
  const DecisionLayout layout = layout_decisions(s);
  const CompiledScenario cs(s);
  OracleWalk walk{cs, {}};
  walk.build(psi0, 0);

  SolveReport report;
  if (layout.total == 0) {  // no stages: the unique empty strategy
    report.value = walk.arena.front().terminal_value;
    report.strategy = TreeStrategy{TreeStrategyNode{-1, report.value, {}}};
    report.nodes_expanded = 1;
    return report;
  }

  std::vector<int> digits(static_cast<size_t>(layout.total), 0);
  std::vector<int> radix(static_cast<size_t>(layout.total));
  for (int k = 0; k < s.num_stages(); ++k) {
    for (long long i = 0; i < layout.counts[static_cast<size_t>(k)]; ++i) {
      radix[static_cast<size_t>(layout.offsets[static_cast<size_t>(k)] + i)] =
          layout.grid_sizes[static_cast<size_t>(k)];
    }
  }

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_digits;
  long long evaluated = 0;
  while (true) {
    ++evaluated;
    const double value = walk_strategy(walk, layout, digits, 0, 0, 0, 1.0, nullptr);
    if (value < best) {
      best = value;
      best_digits = digits;
    }
    // mixed-radix odometer, last digit fastest
    long long pos = layout.total - 1;
    while (pos >= 0) {
      if (++digits[static_cast<size_t>(pos)] < radix[static_cast<size_t>(pos)]) break;
      digits[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  double pruned = 0.0;
  walk_strategy(walk, layout, best_digits, 0, 0, 0, 1.0, &pruned);
  report.value = best;
  report.strategy = TreeStrategy{strategy_tree_from_digits(walk, layout, best_digits, 0, 0, 0)};
  report.nodes_expanded = evaluated;
  report.pruned_mass = pruned;
  return report;
}

namespace {

int strategy_control(const Strategy& strategy, int k, const MeasurementRecord& prefix,
                     const TreeStrategyNode** cursor) {
  if (std::holds_alternative<TableStrategy>(strategy)) {
    const TableStrategy& table = std::get<TableStrategy>(strategy);
    if (k == 0) return table.initial_control;
    const size_t idx = static_cast<size_t>(k - 1);
    if (idx >= table.policy.size()) {
      throw StrategyError("strategy: no table for stage " + std::to_string(k));
    }
    const auto it = table.policy[idx].find(prefix.back());
    if (it == table.policy[idx].end()) {
      throw StrategyError("strategy: stage " + std::to_string(k) + " has no control for outcome " +
                          std::to_string(prefix.back()));
    }
    return it->second;
  }
  // Tree strategy: *cursor tracks the node for the current prefix.
  if (*cursor == nullptr) {
    throw StrategyError("strategy: missing node at stage " + std::to_string(k));
  }
  const int u = (*cursor)->control_index;
  if (u < 0) {
    throw StrategyError("strategy: node at stage " + std::to_string(k) + " carries no control");
  }
  return u;
}

const TreeStrategyNode* descend(const Strategy& strategy, const TreeStrategyNode* cursor,
                                int outcome, int k) {
  if (!std::holds_alternative<TreeStrategy>(strategy)) return nullptr;
  if (cursor == nullptr) return nullptr;
  const auto it = cursor->children.find(outcome);
  if (it == cursor->children.end()) {
    // Tolerated at the last stage (leaves are optional in serialized form).
    return nullptr;
  }
  return &it->second;
}

double forward_value(const CompiledScenario& cs, const Strategy& strategy, int k,
                     const Ket& psi, double prob, MeasurementRecord& prefix,
                     const TreeStrategyNode* cursor) {
  const Scenario& s = cs.scenario();
  if (k == s.num_stages()) {
    return prob * expect(psi.amplitudes(), s.terminal.matrix(), s.tol);
  }
  const int u = strategy_control(strategy, k, prefix, &cursor);
  const CompiledStage& stage = cs.stage(k);
  if (u < 0 || static_cast<size_t>(u) >= stage.instruments.size()) {
    throw StrategyError("strategy: control index " + std::to_string(u) +
                        " outside stage " + std::to_string(k) + "'s grid");
  }
  const Instrument& ins = stage.instruments[static_cast<size_t>(u)];
  double acc = prob * expect(psi.amplitudes(), stage.costs[static_cast<size_t>(u)].matrix(), s.tol);
  const OutcomeDistribution dist = outcome_probabilities(ins, psi);
  for (size_t i = 0; i < dist.probabilities.size(); ++i) {
    const double p = dist.probabilities[i];
    if (p <= s.tol.zero_probability_floor) continue;
    const int label = ins.outcome(i).parts.front();
    prefix.push_back(label);
    acc += forward_value(cs, strategy, k + 1, posterior_ket_by_index(ins, psi, i), prob * p,
                         prefix, descend(strategy, cursor, label, k));
    prefix.pop_back();
  }
  return acc;
}

}  // namespace

double evaluate_strategy(const Scenario& s, const Strategy& strategy, const Ket& psi0) {
  if (psi0.dim() != s.dim) {
    throw DimensionError("evaluate_strategy: initial state dimension mismatch");
  }
  const CompiledScenario cs(s);
  MeasurementRecord prefix;
  const TreeStrategyNode* root =
      std::holds_alternative<TreeStrategy>(strategy) ? &std::get<TreeStrategy>(strategy).root
                                                     : nullptr;
  return forward_value(cs, strategy, 0, psi0, 1.0, prefix, root);
}

}  // namespace qfb
