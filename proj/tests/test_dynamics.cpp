#include <doctest.h>

#include "helpers.hpp"
#include "qfb/dynamics.hpp"

using namespace qfb;
using namespace qfb::test;

namespace {

ComplexMatrix analytic_rotating_cost(double tau) {
  // integral of T(t)' sigma_z T(t) for H = sigma_x:
  // T(t)' sigma_z T(t) = cos(2t) sigma_z + sin(2t) sigma_y.
  return (std::sin(2.0 * tau) / 2.0) * sigma_z() +
         ((1.0 - std::cos(2.0 * tau)) / 2.0) * sigma_y();
}

}  // namespace

TEST_CASE("stage_propagator: pinned cases") {
  const ControlledHamiltonian free_qubit{HermitianOperator(zero2())};
  const ControlVector none(0);
  CHECK(max_abs(stage_propagator(free_qubit, none, 1.0) - ComplexMatrix::Identity(2, 2)) <
        1e-15);

  const ControlledHamiltonian precession{HermitianOperator(sigma_z())};
  CHECK(max_abs(stage_propagator(precession, none, M_PI) + ComplexMatrix::Identity(2, 2)) <
        1e-12);

  const ControlledHamiltonian driven{HermitianOperator(zero2()),
                                     {HermitianOperator(sigma_x())}};
  const ComplexMatrix u = stage_propagator(driven, control1(M_PI / 4.0), 1.0);
  const ComplexMatrix closed = std::cos(M_PI / 4.0) * ComplexMatrix::Identity(2, 2) -
                               Complex(0, 1) * std::sin(M_PI / 4.0) * sigma_x();
  CHECK(max_abs(u - closed) < 1e-12);
  CHECK(max_abs(u - expm_series((M_PI / 4.0) * sigma_x(), 1.0)) < 1e-12);

  CHECK_THROWS_AS(stage_propagator(driven, ControlVector(0), 1.0), DimensionError);
}

TEST_CASE("stage_instrument: kraus structure and statistics") {
  StageSpec stage;
  stage.duration = 1.0;
  stage.measurement = sigma_z_projectors();
  stage.control_grid.push_back(ControlVector(0));

  const ControlledHamiltonian free_qubit{HermitianOperator(zero2())};
  const Instrument frozen = stage_instrument(free_qubit, stage, ControlVector(0));
  CHECK(max_abs(frozen.kraus(0) - sigma_z_projectors()[0].matrix()) < 1e-15);
  CHECK(max_abs(frozen.kraus(1) - sigma_z_projectors()[1].matrix()) < 1e-15);
  CHECK(validate_instrument(frozen).pass);

  // Trivial projector: the stage is a pure Schroedinger step.
  StageSpec unobserved;
  unobserved.duration = 0.7;
  unobserved.measurement = trivial_projector(2);
  unobserved.control_grid.push_back(ControlVector(0));
  const ControlledHamiltonian precession{HermitianOperator(sigma_z())};
  const Instrument closed_loop = stage_instrument(precession, unobserved, ControlVector(0));
  REQUIRE(closed_loop.size() == 1);
  CHECK(max_abs(closed_loop.kraus(0) - stage_propagator(precession, ControlVector(0), 0.7)) <
        1e-14);

  const ControlledHamiltonian driven{HermitianOperator(zero2()),
                                     {HermitianOperator(sigma_x())}};
  StageSpec kicked;
  kicked.duration = 1.0;
  kicked.measurement = sigma_z_projectors();
  kicked.control_grid.push_back(control1(M_PI / 8.0));
  const Instrument ins = stage_instrument(driven, kicked, control1(M_PI / 8.0));
  const OutcomeDistribution dist = outcome_probabilities(ins, basis_ket(2, 0));
  CHECK(dist.probabilities[0] == doctest::Approx(0.85355339059327373).epsilon(1e-12));
  CHECK(dist.probabilities[1] == doctest::Approx(0.14644660940672624).epsilon(1e-12));
}

TEST_CASE("stage_instrument: normalization across random scenarios") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RandomScenarioOptions opt;
    opt.dim = 2 + trial % 2;
    opt.stages = 2;
    opt.complete = trial % 3 != 0;
    const Scenario s = random_scenario(rng, opt);
    for (size_t k = 0; k < s.stages.size(); ++k) {
      for (const ControlVector& u : s.stages[k].control_grid) {
        const Instrument ins = stage_instrument(s.hamiltonian, s.stages[k], u, s.tol);
        CHECK(validate_instrument(ins).normalization_residual <= 1e-10);
      }
    }
  }
}

TEST_CASE("chronological composition of stage instruments") {
  std::mt19937_64 rng(13);
  RandomScenarioOptions opt;
  opt.dim = 2;
  opt.stages = 2;
  const Scenario s = random_scenario(rng, opt);
  const ControlVector u0 = s.stages[0].control_grid.front();
  const ControlVector u1 = s.stages[1].control_grid.front();
  const Instrument first = stage_instrument(s.hamiltonian, s.stages[0], u0, s.tol);
  const Instrument second = stage_instrument(s.hamiltonian, s.stages[1], u1, s.tol);
  const Instrument two = compose(first, second);
  const ComplexMatrix t0 = stage_propagator(s.hamiltonian, u0, s.stages[0].duration, s.tol);
  const ComplexMatrix t1 = stage_propagator(s.hamiltonian, u1, s.stages[1].duration, s.tol);
  size_t idx = 0;
  for (size_t i = 0; i < first.size(); ++i) {
    for (size_t j = 0; j < second.size(); ++j, ++idx) {
      const ComplexMatrix expected = s.stages[1].measurement[j].matrix() * t1 *
                                     s.stages[0].measurement[i].matrix() * t0;
      CHECK(max_abs(two.kraus(idx) - expected) <= 1e-12);
    }
  }
  CHECK(validate_instrument(two).pass);
}

TEST_CASE("stage_cost: exact cases") {
  const ControlledHamiltonian driven{HermitianOperator(sigma_z())};
  CostSpec scalar{HermitianOperator(0.3 * ComplexMatrix::Identity(2, 2)), {}, {}};
  const HermitianOperator sc = stage_cost(driven, scalar, ControlVector(0), 1.7, 16);
  CHECK(max_abs(sc.matrix() - 0.3 * 1.7 * ComplexMatrix::Identity(2, 2)) < 1e-13);

  // [H, S] = 0: the integrand is constant, Simpson is exact.
  CostSpec commuting{HermitianOperator(sigma_z()), {}, {}};
  const HermitianOperator cc = stage_cost(driven, commuting, ControlVector(0), 0.9, 2);
  CHECK(max_abs(cc.matrix() - 0.9 * sigma_z()) < 1e-12);
}

TEST_CASE("stage_cost: noncommuting analytic case and fourth-order convergence") {
  const ControlledHamiltonian rabi{HermitianOperator(sigma_x())};
  CostSpec spec{HermitianOperator(sigma_z()), {}, {}};
  const double tau = 0.3;
  const ComplexMatrix exact = analytic_rotating_cost(tau);

  const double err8 = max_abs(stage_cost(rabi, spec, ControlVector(0), tau, 8).matrix() - exact);
  const double err16 =
      max_abs(stage_cost(rabi, spec, ControlVector(0), tau, 16).matrix() - exact);
  const double err32 =
      max_abs(stage_cost(rabi, spec, ControlVector(0), tau, 32).matrix() - exact);
  CHECK(err16 <= 1e-8);
  CHECK(err8 / err16 >= 8.0);
  CHECK(err16 / err32 >= 8.0);

  // Odd substep counts round up to the next even panel count.
  const double err15 =
      max_abs(stage_cost(rabi, spec, ControlVector(0), tau, 15).matrix() - exact);
  CHECK(err15 == doctest::Approx(err16).epsilon(1e-12));
}

TEST_CASE("stage_cost: PSD cost stays PSD") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 2 + trial % 2;
    const ControlledHamiltonian ham(random_hermitian(d, rng), {random_hermitian(d, rng)});
    CostSpec spec{random_psd(d, rng), {}, {0.2}};
    const HermitianOperator cost = stage_cost(ham, spec, control1(0.4), 0.8, 16);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(cost.matrix(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("cost operator assembly: linear and quadratic terms") {
  CostSpec spec{HermitianOperator(sigma_z()), {HermitianOperator(sigma_x())}, {0.5}};
  const ComplexMatrix s = spec.at(control1(2.0));
  const ComplexMatrix expected =
      sigma_z() + 2.0 * sigma_x() + 0.5 * 4.0 * ComplexMatrix::Identity(2, 2);
  CHECK(max_abs(s - expected) < 1e-15);

  CHECK_THROWS_AS(spec.at(ControlVector(0)), DimensionError);
}

TEST_CASE("compiled scenario matches ad hoc stage computations") {
  std::mt19937_64 rng(19);
  RandomScenarioOptions opt;
  opt.dim = 2;
  opt.stages = 3;
  const Scenario s = random_scenario(rng, opt);
  const CompiledScenario cs(s);
  for (int k = 0; k < s.num_stages(); ++k) {
    const StageSpec& stage = s.stages[static_cast<size_t>(k)];
    for (size_t ui = 0; ui < stage.control_grid.size(); ++ui) {
      const ControlVector& u = stage.control_grid[ui];
      CHECK(max_abs(cs.stage(k).propagators[ui] -
                    stage_propagator(s.hamiltonian, u, stage.duration, s.tol)) == 0.0);
      CHECK(max_abs(cs.stage(k).costs[ui].matrix() -
                    stage_cost(s.hamiltonian, s.costs[static_cast<size_t>(k)], u, stage.duration,
                               stage.substeps, s.tol)
                        .matrix()) == 0.0);
    }
  }
}

TEST_CASE("scenario invariants: violations are named") {
  Scenario s = reference_qubit_scenario();
  s.stages[0].duration = -1.0;
  CHECK_THROWS_AS(validate_scenario_invariants(s), InvariantError);

  Scenario grid = reference_qubit_scenario();
  grid.stages[1].control_grid.clear();
  CHECK_THROWS_AS(validate_scenario_invariants(grid), InvariantError);

  Scenario proj = reference_qubit_scenario();
  proj.stages[0].measurement.pop_back();
  CHECK_THROWS_AS(validate_scenario_invariants(proj), InvariantError);
}
