#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qfb {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Numerical gates shared by all validating constructors and checks.
/// Scenario files may override any of them under "tolerances".
struct Tolerances {
  double hermiticity = 1e-9;
  double norm = 1e-9;
  double idempotency = 1e-9;
  double psd = 1e-9;
  double unitarity = 1e-10;
  double numeric = 1e-10;
  double normalization = 1e-9;
  double zero_probability_floor = 1e-12;
};

/// Max-norm: largest absolute value of any entry (0 for empty matrices).
inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline bool all_finite(const ComplexVector& v) {
  return v.allFinite();
}

}  // namespace qfb
