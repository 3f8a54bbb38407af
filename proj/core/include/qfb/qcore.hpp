#pragma once

#include <vector>

#include "qfb/errors.hpp"
#include "qfb/types.hpp"

namespace qfb {

/// Hermitian matrix validated at construction: ||M - M'||_max within the
/// hermiticity gate. Houses observables, Hamiltonians and cost operators.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexMatrix m, const Tolerances& tol = {});

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

/// Unit vector in the Hilbert space.
class Ket {
 public:
  explicit Ket(ComplexVector amplitudes, const Tolerances& tol = {});

  const ComplexVector& amplitudes() const { return a_; }
  Eigen::Index dim() const { return a_.size(); }

 private:
  ComplexVector a_;
};

/// Positive trace-one operator. Validation: Hermitian within tolerance,
/// eigenvalues >= -psd gate, |trace - 1| within the norm gate.
class DensityOperator {
 public:
  explicit DensityOperator(ComplexMatrix m, const Tolerances& tol = {});

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

/// Hermitian idempotent with an integer outcome label.
class Projector {
 public:
  Projector(ComplexMatrix m, int label, const Tolerances& tol = {});

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  int label() const { return label_; }
  /// Rank = trace, rounded; exact for anything passing the idempotency gate.
  Eigen::Index rank() const { return rank_; }

 private:
  ComplexMatrix m_;
  int label_;
  Eigen::Index rank_;
};

/// Re tr{rho Q}. The imaginary part must vanish within the numeric gate and
/// is discarded; beyond the gate it is a NumericsError.
double expect(const DensityOperator& rho, const HermitianOperator& q,
              const Tolerances& tol = {});

/// <psi|Q psi> for a raw amplitude vector; same numeric-gate rule as expect().
double expect(const ComplexVector& psi, const ComplexMatrix& q,
              const Tolerances& tol = {});

/// |psi><psi|, a rank-one density operator.
DensityOperator ket_to_density(const Ket& psi, const Tolerances& tol = {});

/// U = exp(-i h dt) via Hermitian eigendecomposition (hbar = 1).
/// Unitary to within the unitarity gate by construction.
ComplexMatrix propagator_step(const HermitianOperator& h, double dt,
                              const Tolerances& tol = {});

struct CpReport {
  double min_choi_eigenvalue = 0.0;
  Eigen::Index choi_dim = 0;
  bool pass = false;
};

/// Choi test for the map rho -> sum_v w_v F_v rho F_v'. Kraus form is CP by
/// construction; this exists to vet hand-entered channels and file inputs.
/// Empty `weights` means the counting measure (all ones).
CpReport check_complete_positivity(const std::vector<ComplexMatrix>& kraus,
                                   const std::vector<double>& weights = {},
                                   const Tolerances& tol = {});

/// Same test for a map given as a raw superoperator matrix L acting on
/// column-stacked densities: vec(Phi(rho)) = L vec(rho). L is
/// (dim_out^2) x (dim_in^2); the Choi matrix is recovered by reshuffling.
CpReport check_complete_positivity_superoperator(const ComplexMatrix& superop,
                                                 Eigen::Index dim_in,
                                                 Eigen::Index dim_out,
                                                 const Tolerances& tol = {});

}  // namespace qfb
