#include "qfb/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace qfb {

ControlledHamiltonian::ControlledHamiltonian(HermitianOperator h0,
                                             std::vector<HermitianOperator> controls)
    : h0_(std::move(h0)), controls_(std::move(controls)) {
  for (const auto& h : controls_) {
    if (h.dim() != h0_.dim()) {
      throw DimensionError("ControlledHamiltonian: control term dimension mismatch");
    }
  }
}

ComplexMatrix ControlledHamiltonian::at(const ControlVector& u) const {
  if (u.size() != num_controls()) {
    std::ostringstream os;
    os << "ControlledHamiltonian: control vector has " << u.size() << " entries, expected "
       << num_controls();
    throw DimensionError(os.str());
  }
  ComplexMatrix h = h0_.matrix();
  for (int i = 0; i < num_controls(); ++i) {
    h.noalias() += Complex(u[i], 0.0) * controls_[static_cast<size_t>(i)].matrix();
  }
  return h;
}

ComplexMatrix CostSpec::at(const ControlVector& u) const {
  ComplexMatrix s = s0.matrix();
  if (!linear.empty()) {
    if (static_cast<Eigen::Index>(linear.size()) != u.size()) {
      throw DimensionError("CostSpec: linear term count does not match control channels");
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      s.noalias() += Complex(u[i], 0.0) * linear[static_cast<size_t>(i)].matrix();
    }
  }
  if (!quad_penalty.empty()) {
    if (static_cast<Eigen::Index>(quad_penalty.size()) != u.size()) {
      throw DimensionError("CostSpec: quadratic penalty count does not match control channels");
    }
    double q = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      q += quad_penalty[static_cast<size_t>(i)] * u[i] * u[i];
    }
    s += q * ComplexMatrix::Identity(s.rows(), s.cols());
  }
  return s;
}

const Ket& Scenario::initial_ket() const {
  if (!initial_is_ket()) {
    throw StateError("scenario: operation requires a vector initial state");
  }
  return std::get<Ket>(initial);
}

DensityOperator Scenario::initial_density() const {
  if (initial_is_ket()) return ket_to_density(std::get<Ket>(initial), tol);
  return std::get<DensityOperator>(initial);
}

void validate_scenario_invariants(const Scenario& s) {
  if (s.dim <= 0) throw InvariantError("scenario: dimension must be positive", "dim");
  if (s.hamiltonian.dim() != s.dim) {
    throw DimensionError("scenario: Hamiltonian dimension does not match dim", "hamiltonian");
  }
  if (s.costs.size() != s.stages.size()) {
    throw DimensionError("scenario: per-stage cost count does not match stage count", "cost");
  }
  if (s.terminal.dim() != s.dim) {
    throw DimensionError("scenario: terminal operator dimension mismatch", "terminal");
  }
  {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s.terminal.matrix(), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -s.tol.psd) {
      std::ostringstream os;
      os << "scenario: terminal operator has minimum eigenvalue " << min_eig
         << ", expected positive semidefinite";
      throw InvariantError(os.str(), "terminal");
    }
  }
  const Eigen::Index init_dim =
      s.initial_is_ket() ? std::get<Ket>(s.initial).dim() : std::get<DensityOperator>(s.initial).dim();
  if (init_dim != s.dim) {
    throw DimensionError("scenario: initial state dimension mismatch", "initial");
  }

  for (size_t k = 0; k < s.stages.size(); ++k) {
    const StageSpec& st = s.stages[k];
    const std::string loc = "stages/" + std::to_string(k);
    if (!(st.duration > 0.0) || !std::isfinite(st.duration)) {
      throw InvariantError("scenario: stage duration must be positive", loc + "/duration");
    }
    if (st.substeps < 1) {
      throw InvariantError("scenario: substeps must be >= 1", loc + "/substeps");
    }
    if (st.measurement.empty()) {
      throw InvariantError("scenario: stage needs at least one projector (I for no observation)",
                           loc + "/projectors");
    }
    if (st.control_grid.empty()) {
      throw InvariantError("scenario: control grid must be nonempty", loc + "/control_grid");
    }
    for (size_t i = 0; i < st.control_grid.size(); ++i) {
      const ControlVector& u = st.control_grid[i];
      if (u.size() != s.hamiltonian.num_controls()) {
        throw DimensionError("scenario: control vector length does not match control channels",
                             loc + "/control_grid/" + std::to_string(i));
      }
      if (!u.allFinite()) {
        throw InvariantError("scenario: control vector has non-finite entries",
                             loc + "/control_grid/" + std::to_string(i));
      }
    }

    ComplexMatrix sum = ComplexMatrix::Zero(s.dim, s.dim);
    for (size_t i = 0; i < st.measurement.size(); ++i) {
      const Projector& e = st.measurement[i];
      if (e.dim() != s.dim) {
        throw DimensionError("scenario: projector dimension mismatch",
                             loc + "/projectors/" + std::to_string(i));
      }
      sum += e.matrix();
      for (size_t j = i + 1; j < st.measurement.size(); ++j) {
        const double cross = max_abs(e.matrix() * st.measurement[j].matrix());
        if (cross > s.tol.idempotency) {
          std::ostringstream os;
          os << "scenario: projectors " << i << " and " << j << " are not orthogonal (residual "
             << cross << ")";
          throw InvariantError(os.str(), loc + "/projectors");
        }
      }
    }
    const double res = max_abs(sum - ComplexMatrix::Identity(s.dim, s.dim));
    if (res > s.tol.norm) {
      std::ostringstream os;
      os << "scenario: projectors do not resolve the identity (residual " << res << ")";
      throw InvariantError(os.str(), loc + "/projectors");
    }
  }

  for (size_t k = 0; k < s.costs.size(); ++k) {
    const CostSpec& c = s.costs[k];
    const std::string loc = "cost";
    if (c.s0.dim() != s.dim) {
      throw DimensionError("scenario: cost operator dimension mismatch", loc + "/s0");
    }
    if (!c.linear.empty() &&
        c.linear.size() != static_cast<size_t>(s.hamiltonian.num_controls())) {
      throw DimensionError("scenario: cost linear term count does not match control channels",
                           loc + "/linear");
    }
    for (const auto& l : c.linear) {
      if (l.dim() != s.dim) {
        throw DimensionError("scenario: cost linear term dimension mismatch", loc + "/linear");
      }
    }
    if (!c.quad_penalty.empty() &&
        c.quad_penalty.size() != static_cast<size_t>(s.hamiltonian.num_controls())) {
      throw DimensionError("scenario: quadratic penalty count does not match control channels",
                           loc + "/quad_penalty");
    }
    for (double q : c.quad_penalty) {
      if (q < 0.0 || !std::isfinite(q)) {
        throw InvariantError("scenario: quadratic penalties must be nonnegative",
                             loc + "/quad_penalty");
      }
    }
  }
}

ComplexMatrix stage_propagator(const ControlledHamiltonian& ham, const ControlVector& u,
                               double tau, const Tolerances& tol) {
  return propagator_step(HermitianOperator(ham.at(u), tol), tau, tol);
}

Instrument stage_instrument(const ControlledHamiltonian& ham, const StageSpec& stage,
                            const ControlVector& u, const Tolerances& tol) {
  const ComplexMatrix t = stage_propagator(ham, u, stage.duration, tol);
  std::vector<Outcome> labels;
  std::vector<ComplexMatrix> kraus;
  labels.reserve(stage.measurement.size());
  kraus.reserve(stage.measurement.size());
  for (const Projector& e : stage.measurement) {
    labels.emplace_back(e.label());
    kraus.emplace_back(e.matrix() * t);
  }
  return Instrument(std::move(labels), std::move(kraus), {}, tol);
}

HermitianOperator stage_cost(const ControlledHamiltonian& ham, const CostSpec& cost,
                             const ControlVector& u, double tau, int substeps,
                             const Tolerances& tol) {
  if (substeps < 1) throw ConfigError("stage_cost: substeps must be >= 1");
  int n = substeps;
  if (n % 2 != 0) ++n;  // composite Simpson needs an even panel count

  const ComplexMatrix h = ham.at(u);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) {
    throw NumericsError("stage_cost: eigendecomposition failed");
  }
  const ComplexMatrix& v = es.eigenvectors();
  const RealVector& lambda = es.eigenvalues();
  const Eigen::Index d = h.rows();

  // In the H(u) eigenbasis the integrand is a pure phase twist of a fixed
  // matrix: (T(t)' S T(t))_jk = exp(i (l_j - l_k) t) (V' S V)_jk.
  const ComplexMatrix s_eig = v.adjoint() * cost.at(u) * v;
  const double hstep = tau / n;
  ComplexMatrix acc = ComplexMatrix::Zero(d, d);
  for (int i = 0; i <= n; ++i) {
    const double t = hstep * i;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    ComplexMatrix node(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        node(r, c) = std::polar(1.0, (lambda[r] - lambda[c]) * t) * s_eig(r, c);
      }
    }
    acc += w * node;
  }
  acc *= hstep / 3.0;

  ComplexMatrix result = v * acc * v.adjoint();
  result = 0.5 * (result + result.adjoint().eval());
  return HermitianOperator(std::move(result), tol);
}

CompiledScenario::CompiledScenario(const Scenario& s) : scenario_(&s) {
  stages_.reserve(s.stages.size());
  for (size_t k = 0; k < s.stages.size(); ++k) {
    const StageSpec& st = s.stages[k];
    CompiledStage cs;
    cs.propagators.reserve(st.control_grid.size());
    cs.instruments.reserve(st.control_grid.size());
    cs.costs.reserve(st.control_grid.size());
    for (const ControlVector& u : st.control_grid) {
      cs.propagators.push_back(stage_propagator(s.hamiltonian, u, st.duration, s.tol));
      const ComplexMatrix& t = cs.propagators.back();
      std::vector<Outcome> labels;
      std::vector<ComplexMatrix> kraus;
      for (const Projector& e : st.measurement) {
        labels.emplace_back(e.label());
        kraus.emplace_back(e.matrix() * t);
      }
      cs.instruments.emplace_back(std::move(labels), std::move(kraus),
                                  std::vector<double>{}, s.tol);
      cs.costs.push_back(stage_cost(s.hamiltonian, s.costs[k], u, st.duration, st.substeps, s.tol));
    }
    stages_.push_back(std::move(cs));
  }
}

}  // namespace qfb
