#include "qfb/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qfb {

namespace {

std::string prefix_str(const MeasurementRecord& r) {
  std::string s = "(";
  for (size_t i = 0; i < r.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(r[i]);
  }
  return s + ")";
}

/// Unit eigenvector of a rank-one projector: the normalized column of largest
/// norm (a rank-one Hermitian idempotent is c c' with ||c|| = 1).
ComplexVector rank_one_eigenvector(const Projector& e) {
  Eigen::Index best = 0;
  double best_norm = 0.0;
  for (Eigen::Index j = 0; j < e.dim(); ++j) {
    const double n = e.matrix().col(j).norm();
    if (n > best_norm) {
      best_norm = n;
      best = j;
    }
  }
  ComplexVector v = e.matrix().col(best);
  return v / v.norm();
}

void require_complete(const Scenario& s, int k) {
  const StageSpec& st = s.stages.at(static_cast<size_t>(k));
  for (const Projector& e : st.measurement) {
    if (e.rank() != 1) {
      std::ostringstream os;
      os << "stage " << k << ": projector " << e.label() << " has rank " << e.rank()
         << "; complete measurements need rank-one projectors";
      throw NotCompleteMeasurementError(os.str(), "stages/" + std::to_string(k));
    }
  }
  if (static_cast<Eigen::Index>(st.measurement.size()) != s.dim) {
    std::ostringstream os;
    os << "stage " << k << ": " << st.measurement.size()
       << " projectors cannot form a complete measurement in dimension " << s.dim;
    throw NotCompleteMeasurementError(os.str(), "stages/" + std::to_string(k));
  }
}

}  // namespace

bool is_complete_measurement(const Scenario& s, int k) {
  const StageSpec& st = s.stages.at(static_cast<size_t>(k));
  if (static_cast<Eigen::Index>(st.measurement.size()) != s.dim) return false;
  for (const Projector& e : st.measurement) {
    if (e.rank() != 1) return false;
  }
  return true;
}

std::vector<ComplexVector> measurement_basis(const Scenario& s, int k) {
  require_complete(s, k);
  std::vector<ComplexVector> basis;
  basis.reserve(s.stages[static_cast<size_t>(k)].measurement.size());
  for (const Projector& e : s.stages[static_cast<size_t>(k)].measurement) {
    basis.push_back(rank_one_eigenvector(e));
  }
  return basis;
}

FilteredTrajectory filter_trajectory(const Scenario& s, const std::vector<ControlVector>& controls,
                                     const MeasurementRecord& record) {
  if (controls.size() != record.size()) {
    throw DimensionError("filter_trajectory: controls and record lengths differ");
  }
  if (record.size() > s.stages.size()) {
    throw DimensionError("filter_trajectory: record longer than the stage schedule");
  }

  FilteredTrajectory out;
  std::variant<Ket, DensityOperator> state = s.initial;
  MeasurementRecord prefix;
  for (size_t k = 0; k < record.size(); ++k) {
    const Instrument ins =
        stage_instrument(s.hamiltonian, s.stages[k], controls[k], s.tol);
    const Outcome v(record[k]);
    const size_t idx = ins.index_of(v);
    prefix.push_back(record[k]);

    double p = 0.0;
    if (std::holds_alternative<Ket>(state)) {
      const Ket& psi = std::get<Ket>(state);
      p = ins.weight(idx) * (ins.kraus(idx) * psi.amplitudes()).squaredNorm();
      if (p <= s.tol.zero_probability_floor) {
        throw ZeroProbabilityError(
            "filter_trajectory: record prefix " + prefix_str(prefix) + " has probability " +
                std::to_string(p),
            prefix_str(prefix));
      }
      state = posterior_ket_by_index(ins, psi, idx);
    } else {
      const DensityOperator& rho = std::get<DensityOperator>(state);
      p = ins.weight(idx) *
          (ins.kraus(idx) * rho.matrix() * ins.kraus(idx).adjoint()).trace().real();
      if (p <= s.tol.zero_probability_floor) {
        throw ZeroProbabilityError(
            "filter_trajectory: record prefix " + prefix_str(prefix) + " has probability " +
                std::to_string(p),
            prefix_str(prefix));
      }
      state = posterior_density_by_index(ins, rho, idx);
    }
    out.states.push_back(state);
    out.stage_probs.push_back(p);
    out.probability *= p;
  }
  return out;
}

TransitionKernel complete_measurement_kernel(const Scenario& s, int k) {
  if (k < 0 || k + 1 >= s.num_stages()) {
    throw DimensionError("complete_measurement_kernel: need stages k and k+1 in range");
  }
  require_complete(s, k);
  require_complete(s, k + 1);

  const StageSpec& src = s.stages[static_cast<size_t>(k)];
  const StageSpec& dst = s.stages[static_cast<size_t>(k + 1)];

  std::vector<ComplexVector> src_basis, dst_basis;
  TransitionKernel kernel;
  kernel.stage = k;
  for (const Projector& e : src.measurement) {
    kernel.source_outcomes.push_back(e.label());
    src_basis.push_back(rank_one_eigenvector(e));
  }
  for (const Projector& e : dst.measurement) {
    kernel.target_outcomes.push_back(e.label());
    dst_basis.push_back(rank_one_eigenvector(e));
  }

  // The evolution feeding stage k+1's measurement is stage k+1's propagator.
  for (const ControlVector& u : dst.control_grid) {
    const ComplexMatrix t = stage_propagator(s.hamiltonian, u, dst.duration, s.tol);
    RealMatrix m(src_basis.size(), dst_basis.size());
    for (size_t a = 0; a < src_basis.size(); ++a) {
      for (size_t b = 0; b < dst_basis.size(); ++b) {
        const double p = std::norm(dst_basis[b].dot(t * src_basis[a]));
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            std::clamp(p, 0.0, 1.0);
      }
    }
    kernel.matrices.push_back(std::move(m));
  }
  return kernel;
}

CkReport verify_chapman_kolmogorov(const Scenario& s, const std::vector<TransitionKernel>& kernels,
                                   const std::vector<int>& control_indices) {
  CkReport report;
  report.max_residual = 0.0;
  for (size_t i = 0; i + 1 < kernels.size(); ++i) {
    const TransitionKernel& first = kernels[i];
    const TransitionKernel& second = kernels[i + 1];
    if (second.stage != first.stage + 1) {
      throw DimensionError("verify_chapman_kolmogorov: kernels are not consecutive");
    }
    if (first.target_outcomes != second.source_outcomes) {
      throw DimensionError("verify_chapman_kolmogorov: outcome sets do not chain");
    }
    const int mid_stage = first.stage + 1;   // control grid owning first's matrices
    const int last_stage = first.stage + 2;  // control grid owning second's matrices
    const size_t u_mid = static_cast<size_t>(control_indices.at(static_cast<size_t>(mid_stage)));
    const size_t u_last = static_cast<size_t>(control_indices.at(static_cast<size_t>(last_stage)));
    if (u_mid >= first.matrices.size() || u_last >= second.matrices.size()) {
      throw DimensionError("verify_chapman_kolmogorov: control index outside the grid");
    }

    const RealMatrix product = first.matrices[u_mid] * second.matrices[u_last];

    // Independent route: two-stage kernel from the composed instrument,
    // aggregating composite outcomes (v', v'') by the final coordinate.
    const StageSpec& mid = s.stages[static_cast<size_t>(mid_stage)];
    const StageSpec& last = s.stages[static_cast<size_t>(last_stage)];
    const Instrument two = compose(
        stage_instrument(s.hamiltonian, mid, mid.control_grid[u_mid], s.tol),
        stage_instrument(s.hamiltonian, last, last.control_grid[u_last], s.tol));

    const StageSpec& src = s.stages[static_cast<size_t>(first.stage)];
    RealMatrix aggregated = RealMatrix::Zero(product.rows(), product.cols());
    for (size_t a = 0; a < src.measurement.size(); ++a) {
      const Ket from(rank_one_eigenvector(src.measurement[a]), s.tol);
      const OutcomeDistribution dist = outcome_probabilities(two, from);
      for (size_t j = 0; j < dist.outcomes.size(); ++j) {
        const int final_label = dist.outcomes[j].parts.back();
        const auto it = std::find(second.target_outcomes.begin(), second.target_outcomes.end(),
                                  final_label);
        if (it == second.target_outcomes.end()) {
          throw DimensionError("verify_chapman_kolmogorov: composed outcome not in target set");
        }
        aggregated(static_cast<Eigen::Index>(a), it - second.target_outcomes.begin()) +=
            dist.probabilities[j];
      }
    }
    report.max_residual =
        std::max(report.max_residual, (product - aggregated).cwiseAbs().maxCoeff());
  }
  report.pass = report.max_residual <= 1e-10;
  return report;
}

namespace {

void expand_node(const Scenario& s, const std::vector<ControlVector>& controls, int from_stage,
                 PosteriorNode& node, int k, double& pruned_mass, long long& node_count) {
  if (k >= s.num_stages()) return;
  const Instrument ins = stage_instrument(
      s.hamiltonian, s.stages[static_cast<size_t>(k)],
      controls[static_cast<size_t>(k - from_stage)], s.tol);
  const OutcomeDistribution dist = outcome_probabilities(ins, node.state);
  for (size_t i = 0; i < ins.size(); ++i) {
    const double p_cond = dist.probabilities[i];
    const double p = node.probability * p_cond;
    if (p_cond <= s.tol.zero_probability_floor) {
      pruned_mass += p;
      continue;
    }
    MeasurementRecord prefix = node.prefix;
    prefix.push_back(ins.outcome(i).parts.front());
    PosteriorNode child{std::move(prefix), posterior_ket_by_index(ins, node.state, i), p, {}};
    ++node_count;
    expand_node(s, controls, from_stage, child, k + 1, pruned_mass, node_count);
    node.children.push_back(std::move(child));
  }
}

}  // namespace

PosteriorTree reachable_posteriors(const Scenario& s, int from_stage, const Ket& state,
                                   const std::vector<ControlVector>& controls) {
  if (from_stage < 0 || from_stage > s.num_stages()) {
    throw DimensionError("reachable_posteriors: from_stage out of range");
  }
  if (controls.size() != static_cast<size_t>(s.num_stages() - from_stage)) {
    throw DimensionError("reachable_posteriors: need one control per remaining stage");
  }
  PosteriorTree tree{PosteriorNode{{}, state, 1.0, {}}, 0.0, 1};
  expand_node(s, controls, from_stage, tree.root, from_stage, tree.pruned_mass, tree.node_count);
  return tree;
}

}  // namespace qfb
