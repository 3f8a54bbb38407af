#pragma once

#include <variant>
#include <vector>

#include "qfb/instrument.hpp"
#include "qfb/qcore.hpp"

namespace qfb {

/// Real control amplitudes, one entry per control channel (may be empty).
using ControlVector = Eigen::VectorXd;

/// H(u) = H0 + sum_i u_i H_i.
class ControlledHamiltonian {
 public:
  ControlledHamiltonian(HermitianOperator h0, std::vector<HermitianOperator> controls = {});

  Eigen::Index dim() const { return h0_.dim(); }
  int num_controls() const { return static_cast<int>(controls_.size()); }
  const HermitianOperator& h0() const { return h0_; }
  const std::vector<HermitianOperator>& controls() const { return controls_; }

  ComplexMatrix at(const ControlVector& u) const;

 private:
  HermitianOperator h0_;
  std::vector<HermitianOperator> controls_;
};

/// One control interval: evolve for `duration` under the chosen control, then
/// apply the projective measurement. A stage without observation carries the
/// single trivial projector I.
struct StageSpec {
  double duration = 0.0;
  std::vector<Projector> measurement;
  std::vector<ControlVector> control_grid;
  int substeps = 16;
};

/// S(u) = s0 + sum_i u_i s_linear_i + (sum_i c_i u_i^2) I.
struct CostSpec {
  HermitianOperator s0;
  std::vector<HermitianOperator> linear;    // one per control channel, may be empty
  std::vector<double> quad_penalty;         // c_i >= 0, may be empty

  ComplexMatrix at(const ControlVector& u) const;
};

struct Scenario {
  Eigen::Index dim = 0;
  ControlledHamiltonian hamiltonian;
  std::vector<StageSpec> stages;
  std::vector<CostSpec> costs;              // one per stage
  HermitianOperator terminal;               // Q, positive semidefinite
  std::variant<Ket, DensityOperator> initial;
  Tolerances tol;

  int num_stages() const { return static_cast<int>(stages.size()); }
  bool initial_is_ket() const { return std::holds_alternative<Ket>(initial); }
  const Ket& initial_ket() const;
  DensityOperator initial_density() const;  // promotes a ket if needed
};

/// Full invariant sweep over an assembled scenario; throws on the first
/// violation, naming the failed check and its residual.
void validate_scenario_invariants(const Scenario& s);

/// T_k(u) = exp(-i (H0 + sum u_i H_i) tau); control held constant over the stage.
ComplexMatrix stage_propagator(const ControlledHamiltonian& ham, const ControlVector& u,
                               double tau, const Tolerances& tol = {});

/// Kraus family {E_v T_k(u)} under the counting measure, one operator per
/// projector, labelled by the projector labels.
Instrument stage_instrument(const ControlledHamiltonian& ham, const StageSpec& stage,
                            const ControlVector& u, const Tolerances& tol = {});

/// S_k(u) = integral_0^tau T(t)' S(u) T(t) dt by composite Simpson quadrature
/// (substeps panels, rounded up to even). One eigendecomposition of H(u) is
/// reused across all quadrature nodes; the result is symmetrized exactly.
HermitianOperator stage_cost(const ControlledHamiltonian& ham, const CostSpec& cost,
                             const ControlVector& u, double tau, int substeps,
                             const Tolerances& tol = {});

/// Per-(stage, control) precomputation shared by the DP, the oracle, the
/// strategy evaluator and the simulator. Quadrature dominates, so it runs once.
struct CompiledStage {
  std::vector<ComplexMatrix> propagators;       // per control in the grid
  std::vector<Instrument> instruments;          // per control
  std::vector<HermitianOperator> costs;         // integrated S_k(u), per control
};

class CompiledScenario {
 public:
  explicit CompiledScenario(const Scenario& s);

  const Scenario& scenario() const { return *scenario_; }
  int num_stages() const { return static_cast<int>(stages_.size()); }
  const CompiledStage& stage(int k) const { return stages_.at(static_cast<size_t>(k)); }

 private:
  const Scenario* scenario_;
  std::vector<CompiledStage> stages_;
};

}  // namespace qfb
