#include "qfb/sim.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace qfb {

int worker_count() {
  int requested = 0;
  if (const char* env = std::getenv("QFB_THREADS")) {
    requested = std::atoi(env);
  }
  if (requested <= 0) {
    requested = static_cast<int>(std::thread::hardware_concurrency());
  }
  return std::max(1, requested);
}

namespace {

int pick_outcome(const OutcomeDistribution& dist, double r) {
  double cum = 0.0;
  int last_positive = 0;
  for (size_t i = 0; i < dist.probabilities.size(); ++i) {
    if (dist.probabilities[i] > 0.0) last_positive = static_cast<int>(i);
    cum += dist.probabilities[i];
    if (r < cum) return static_cast<int>(i);
  }
  return last_positive;  // r fell into the rounding slack past the total mass
}

}  // namespace

TrajectoryResult sample_trajectory(const CompiledScenario& cs, const Strategy& strategy,
                                   const Ket& psi0, SplitMix64& rng) {
  const Scenario& s = cs.scenario();
  TrajectoryResult out;
  Ket psi = psi0;
  const TreeStrategyNode* cursor = std::holds_alternative<TreeStrategy>(strategy)
                                       ? &std::get<TreeStrategy>(strategy).root
                                       : nullptr;
  for (int k = 0; k < s.num_stages(); ++k) {
    int u = -1;
    if (std::holds_alternative<TableStrategy>(strategy)) {
      const TableStrategy& table = std::get<TableStrategy>(strategy);
      if (k == 0) {
        u = table.initial_control;
      } else {
        const size_t idx = static_cast<size_t>(k - 1);
        if (idx >= table.policy.size()) {
          throw StrategyError("sample_trajectory: no table for stage " + std::to_string(k));
        }
        const auto it = table.policy[idx].find(out.record.back());
        if (it == table.policy[idx].end()) {
          throw StrategyError("sample_trajectory: stage " + std::to_string(k) +
                              " has no control for outcome " + std::to_string(out.record.back()));
        }
        u = it->second;
      }
    } else {
      if (cursor == nullptr || cursor->control_index < 0) {
        throw StrategyError("sample_trajectory: missing strategy node at stage " +
                            std::to_string(k));
      }
      u = cursor->control_index;
    }
    const CompiledStage& stage = cs.stage(k);
    if (u < 0 || static_cast<size_t>(u) >= stage.instruments.size()) {
      throw StrategyError("sample_trajectory: control index " + std::to_string(u) +
                          " outside stage " + std::to_string(k) + "'s grid");
    }

    out.cost += expect(psi.amplitudes(), stage.costs[static_cast<size_t>(u)].matrix(), s.tol);
    const Instrument& ins = stage.instruments[static_cast<size_t>(u)];
    const OutcomeDistribution dist = outcome_probabilities(ins, psi);
    const int pick = pick_outcome(dist, rng.next_double());
    const int label = ins.outcome(static_cast<size_t>(pick)).parts.front();
    psi = posterior_ket_by_index(ins, psi, static_cast<size_t>(pick));
    out.record.push_back(label);
    if (cursor != nullptr) {
      const auto it = cursor->children.find(label);
      cursor = (it == cursor->children.end()) ? nullptr : &it->second;
    }
  }
  out.cost += expect(psi.amplitudes(), s.terminal.matrix(), s.tol);
  return out;
}

SimResult estimate_risk(const Scenario& s, const SimConfig& cfg, const Strategy& strategy,
                        const Ket& psi0) {
  if (cfg.trajectories < 1) throw ConfigError("estimate_risk: need at least one trajectory");
  const CompiledScenario cs(s);
  const long long n = cfg.trajectories;

  std::vector<TrajectoryResult> results(static_cast<size_t>(n));
  const int workers = std::min<long long>(worker_count(), n);
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_range = [&](long long begin, long long end) {
    try {
      for (long long i = begin; i < end; ++i) {
        SplitMix64 rng = substream(cfg.seed, static_cast<uint64_t>(i));
        results[static_cast<size_t>(i)] = sample_trajectory(cs, strategy, psi0, rng);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const long long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long long begin = w * chunk;
      const long long end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Deterministic reduction in trajectory-index order.
  SimResult out;
  out.n = n;
  out.seed = cfg.seed;
  out.outcome_counts.resize(s.stages.size());
  for (size_t k = 0; k < s.stages.size(); ++k) {
    for (const Projector& e : s.stages[k].measurement) {
      out.outcome_counts[k][e.label()] = 0;
    }
  }
  double sum = 0.0;
  for (const TrajectoryResult& t : results) {
    sum += t.cost;
    for (size_t k = 0; k < t.record.size(); ++k) {
      ++out.outcome_counts[k][t.record[k]];
    }
  }
  out.mean_risk = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const TrajectoryResult& t : results) {
      const double d = t.cost - out.mean_risk;
      ss += d * d;
    }
    out.std_error = std::sqrt(ss / static_cast<double>(n - 1)) /
                    std::sqrt(static_cast<double>(n));
  }
  if (cfg.keep_trajectories) out.trajectories = std::move(results);
  return out;
}

}  // namespace qfb
