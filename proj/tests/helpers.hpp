#pragma once

// Shared fixtures: Pauli shorthands, scenario builders, random ensembles and
// the power-series propagator oracle used to check the eigendecomposition path.

#include <cmath>
#include <random>
#include <vector>

#include "qfb/dynamics.hpp"

namespace qfb::test {

inline ComplexMatrix sigma_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

inline ComplexMatrix sigma_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline ComplexMatrix zero2() { return ComplexMatrix::Zero(2, 2); }

inline Ket basis_ket(Eigen::Index dim, Eigen::Index i) {
  ComplexVector v = ComplexVector::Zero(dim);
  v[i] = 1.0;
  return Ket(std::move(v));
}

inline Ket ket_plus() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return Ket(std::move(v));
}

inline std::vector<Projector> sigma_z_projectors(const Tolerances& tol = {}) {
  ComplexMatrix e0 = ComplexMatrix::Zero(2, 2);
  e0(0, 0) = 1.0;
  ComplexMatrix e1 = ComplexMatrix::Zero(2, 2);
  e1(1, 1) = 1.0;
  return {Projector(e0, 0, tol), Projector(e1, 1, tol)};
}

inline std::vector<Projector> trivial_projector(Eigen::Index dim, const Tolerances& tol = {}) {
  return {Projector(ComplexMatrix::Identity(dim, dim), 0, tol)};
}

/// exp(-i h t) by plain Taylor summation; independent of the eigenbasis route.
inline ComplexMatrix expm_series(const ComplexMatrix& h, double t) {
  const Eigen::Index d = h.rows();
  ComplexMatrix term = ComplexMatrix::Identity(d, d);
  ComplexMatrix acc = term;
  const ComplexMatrix step = Complex(0.0, -t) * h;
  for (int n = 1; n < 400; ++n) {
    term = (term * step / static_cast<double>(n)).eval();
    acc += term;
    if (max_abs(term) < 1e-18) break;
  }
  return acc;
}

inline ComplexMatrix random_matrix(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      m(r, c) = Complex(gauss(rng), gauss(rng));
    }
  }
  return m;
}

inline HermitianOperator random_hermitian(Eigen::Index d, std::mt19937_64& rng,
                                          double scale = 1.0) {
  const ComplexMatrix a = random_matrix(d, rng);
  return HermitianOperator(scale * 0.5 * (a + a.adjoint()));
}

inline HermitianOperator random_psd(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  const ComplexMatrix a = random_matrix(d, rng);
  return HermitianOperator(scale * (a * a.adjoint()) / static_cast<double>(d));
}

inline ComplexMatrix random_unitary(Eigen::Index d, std::mt19937_64& rng) {
  const ComplexMatrix a = random_matrix(d, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(a);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d, d);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mag = std::abs(r(i, i));
    q.col(i) *= mag > 1e-300 ? r(i, i) / mag : Complex(1.0, 0.0);
  }
  return q;
}

inline Ket random_ket(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(gauss(rng), gauss(rng));
  v /= v.norm();
  return Ket(std::move(v));
}

inline DensityOperator random_density(Eigen::Index d, std::mt19937_64& rng) {
  ComplexMatrix a = random_matrix(d, rng);
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(std::move(rho));
}

/// Rank-one projectors onto the columns of a unitary, labelled 0..d-1.
inline std::vector<Projector> basis_projectors(const ComplexMatrix& u,
                                               const Tolerances& tol = {}) {
  std::vector<Projector> out;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    out.emplace_back(u.col(i) * u.col(i).adjoint(), static_cast<int>(i), tol);
  }
  return out;
}

inline ControlVector control1(double value) {
  ControlVector u(1);
  u[0] = value;
  return u;
}

/// The reference qubit scenario: H = u sigma_x, sigma_z measurements each
/// stage, S(u) = c u^2 I, terminal |1><1|, unit stage durations.
inline Scenario reference_qubit_scenario(int num_stages = 3,
                                         std::vector<double> grid = {0.0, M_PI / 8.0,
                                                                     M_PI / 4.0},
                                         double quad_cost = 0.1, Eigen::Index initial = 1) {
  Tolerances tol;
  ControlledHamiltonian ham(HermitianOperator(zero2(), tol),
                            {HermitianOperator(sigma_x(), tol)});
  std::vector<StageSpec> stages;
  std::vector<CostSpec> costs;
  for (int k = 0; k < num_stages; ++k) {
    StageSpec st;
    st.duration = 1.0;
    st.measurement = sigma_z_projectors(tol);
    for (double g : grid) st.control_grid.push_back(control1(g));
    stages.push_back(std::move(st));
    costs.push_back(CostSpec{HermitianOperator(zero2(), tol), {}, {quad_cost}});
  }
  ComplexMatrix q = ComplexMatrix::Zero(2, 2);
  q(1, 1) = 1.0;
  Scenario s{2,
             std::move(ham),
             std::move(stages),
             std::move(costs),
             HermitianOperator(std::move(q), tol),
             basis_ket(2, initial),
             tol};
  validate_scenario_invariants(s);
  return s;
}

struct RandomScenarioOptions {
  Eigen::Index dim = 2;
  int stages = 2;
  int min_grid = 1;          // |U| drawn from min_grid..max_grid
  int max_grid = 3;
  bool complete = true;      // rank-one measurements everywhere
  bool random_initial_ket = true;
};

/// Random scenario: random Hermitian drift and one control channel, random
/// orthonormal measurement bases, random PSD costs and terminal.
inline Scenario random_scenario(std::mt19937_64& rng, const RandomScenarioOptions& opt) {
  Tolerances tol;
  std::uniform_real_distribution<double> duration(0.3, 1.2);
  std::uniform_real_distribution<double> amplitude(-1.0, 1.0);
  std::uniform_int_distribution<int> grid_size(opt.min_grid, opt.max_grid);

  ControlledHamiltonian ham(random_hermitian(opt.dim, rng, 0.7),
                            {random_hermitian(opt.dim, rng, 0.7)});
  std::vector<StageSpec> stages;
  std::vector<CostSpec> costs;
  for (int k = 0; k < opt.stages; ++k) {
    StageSpec st;
    st.duration = duration(rng);
    const ComplexMatrix basis = random_unitary(opt.dim, rng);
    if (opt.complete || opt.dim == 2) {
      st.measurement = basis_projectors(basis, tol);
    } else {
      // Degenerate decomposition: a rank-2 block plus a rank-1 remainder.
      ComplexMatrix block = basis.col(0) * basis.col(0).adjoint() +
                            basis.col(1) * basis.col(1).adjoint();
      st.measurement.emplace_back(std::move(block), 0, tol);
      st.measurement.emplace_back(basis.col(2) * basis.col(2).adjoint(), 1, tol);
    }
    const int nu = grid_size(rng);
    for (int i = 0; i < nu; ++i) st.control_grid.push_back(control1(amplitude(rng)));
    stages.push_back(std::move(st));
    costs.push_back(CostSpec{random_psd(opt.dim, rng, 0.3), {}, {0.1}});
  }
  Scenario s{opt.dim,
             std::move(ham),
             std::move(stages),
             std::move(costs),
             random_psd(opt.dim, rng, 1.0),
             opt.random_initial_ket ? random_ket(opt.dim, rng) : basis_ket(opt.dim, 0),
             tol};
  validate_scenario_invariants(s);
  return s;
}

inline double fidelity(const Ket& a, const Ket& b) {
  return std::abs(a.amplitudes().dot(b.amplitudes()));
}

}  // namespace qfb::test
