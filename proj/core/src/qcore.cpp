#include "qfb/qcore.hpp"

#include <cmath>
#include <sstream>

namespace qfb {

namespace {

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": matrix is " << m.rows() << "x" << m.cols() << ", expected square";
    throw DimensionError(os.str());
  }
}

void require_finite(const ComplexMatrix& m, const char* what) {
  if (!all_finite(m)) throw InvariantError(std::string(what) + ": non-finite entries");
}

double hermiticity_residual(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

}  // namespace

HermitianOperator::HermitianOperator(ComplexMatrix m, const Tolerances& tol) : m_(std::move(m)) {
  require_square(m_, "HermitianOperator");
  require_finite(m_, "HermitianOperator");
  const double res = hermiticity_residual(m_);
  if (res > tol.hermiticity) {
    std::ostringstream os;
    os << "HermitianOperator: hermiticity residual " << res << " exceeds " << tol.hermiticity;
    throw InvariantError(os.str());
  }
}

Ket::Ket(ComplexVector amplitudes, const Tolerances& tol) : a_(std::move(amplitudes)) {
  if (a_.size() == 0) throw DimensionError("Ket: empty amplitude vector");
  if (!all_finite(a_)) throw StateError("Ket: non-finite amplitudes");
  const double res = std::abs(a_.norm() - 1.0);
  if (res > tol.norm) {
    std::ostringstream os;
    os << "Ket: norm deviates from 1 by " << res << " (gate " << tol.norm << ")";
    throw StateError(os.str());
  }
}

DensityOperator::DensityOperator(ComplexMatrix m, const Tolerances& tol) : m_(std::move(m)) {
  require_square(m_, "DensityOperator");
  if (!all_finite(m_)) throw StateError("DensityOperator: non-finite entries");
  const double herm = hermiticity_residual(m_);
  if (herm > tol.hermiticity) {
    std::ostringstream os;
    os << "DensityOperator: hermiticity residual " << herm << " exceeds " << tol.hermiticity;
    throw StateError(os.str());
  }
  const double trace_res = std::abs(m_.trace().real() - 1.0) + std::abs(m_.trace().imag());
  if (trace_res > tol.norm) {
    std::ostringstream os;
    os << "DensityOperator: trace deviates from 1 by " << trace_res << " (gate " << tol.norm << ")";
    throw StateError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m_ + m_.adjoint()),
                                                  Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -tol.psd) {
    std::ostringstream os;
    os << "DensityOperator: minimum eigenvalue " << min_eig << " below -" << tol.psd;
    throw StateError(os.str());
  }
}

Projector::Projector(ComplexMatrix m, int label, const Tolerances& tol)
    : m_(std::move(m)), label_(label) {
  require_square(m_, "Projector");
  require_finite(m_, "Projector");
  const double herm = hermiticity_residual(m_);
  if (herm > tol.hermiticity) {
    std::ostringstream os;
    os << "Projector[" << label_ << "]: hermiticity residual " << herm << " exceeds "
       << tol.hermiticity;
    throw InvariantError(os.str());
  }
  const double idem = max_abs(m_ * m_ - m_);
  if (idem > tol.idempotency) {
    std::ostringstream os;
    os << "Projector[" << label_ << "]: idempotency residual " << idem << " exceeds "
       << tol.idempotency;
    throw InvariantError(os.str());
  }
  rank_ = static_cast<Eigen::Index>(std::llround(m_.trace().real()));
}

double expect(const ComplexVector& psi, const ComplexMatrix& q, const Tolerances& tol) {
  if (psi.size() != q.rows() || q.rows() != q.cols()) {
    throw DimensionError("expect: state/observable dimension mismatch");
  }
  const Complex val = psi.dot(q * psi);  // Eigen's dot conjugates the left argument
  if (std::abs(val.imag()) > tol.numeric) {
    std::ostringstream os;
    os << "expect: imaginary part " << val.imag() << " exceeds numeric gate " << tol.numeric;
    throw NumericsError(os.str());
  }
  return val.real();
}

double expect(const DensityOperator& rho, const HermitianOperator& q, const Tolerances& tol) {
  if (rho.dim() != q.dim()) {
    std::ostringstream os;
    os << "expect: dimension mismatch (state " << rho.dim() << ", observable " << q.dim() << ")";
    throw DimensionError(os.str());
  }
  // tr{rho Q} = sum_ij rho_ij Q_ji, computed entrywise to avoid the product.
  const Complex val = rho.matrix().cwiseProduct(q.matrix().transpose()).sum();
  if (std::abs(val.imag()) > tol.numeric) {
    std::ostringstream os;
    os << "expect: Im tr{rho Q} = " << val.imag() << " exceeds numeric gate " << tol.numeric;
    throw NumericsError(os.str());
  }
  return val.real();
}

DensityOperator ket_to_density(const Ket& psi, const Tolerances& tol) {
  return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint(), tol);
}

ComplexMatrix propagator_step(const HermitianOperator& h, double dt, const Tolerances& tol) {
  if (dt < 0.0) throw ConfigError("propagator_step: negative duration");
  const Eigen::Index d = h.dim();
  if (dt == 0.0) return ComplexMatrix::Identity(d, d);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix());
  if (es.info() != Eigen::Success) {
    throw NumericsError("propagator_step: eigendecomposition failed");
  }
  ComplexVector phases(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    phases[i] = std::polar(1.0, -es.eigenvalues()[i] * dt);
  }
  ComplexMatrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();

  const double res = max_abs(u.adjoint() * u - ComplexMatrix::Identity(d, d));
  if (res > tol.unitarity) {
    std::ostringstream os;
    os << "propagator_step: unitarity residual " << res << " exceeds " << tol.unitarity;
    throw NumericsError(os.str());
  }
  return u;
}

namespace {

CpReport choi_report(const ComplexMatrix& choi, const Tolerances& tol) {
  const double herm = max_abs(choi - choi.adjoint());
  if (herm > tol.hermiticity) {
    std::ostringstream os;
    os << "check_complete_positivity: Choi matrix not Hermitian (residual " << herm << ")";
    throw NumericsError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (choi + choi.adjoint()),
                                                  Eigen::EigenvaluesOnly);
  CpReport report;
  report.choi_dim = choi.rows();
  report.min_choi_eigenvalue = es.eigenvalues().minCoeff();
  report.pass = report.min_choi_eigenvalue >= -tol.psd;
  return report;
}

}  // namespace

CpReport check_complete_positivity(const std::vector<ComplexMatrix>& kraus,
                                   const std::vector<double>& weights, const Tolerances& tol) {
  if (kraus.empty()) throw DimensionError("check_complete_positivity: empty Kraus family");
  if (!weights.empty() && weights.size() != kraus.size()) {
    throw DimensionError("check_complete_positivity: weight count does not match Kraus count");
  }
  const Eigen::Index rows = kraus.front().rows();
  const Eigen::Index cols = kraus.front().cols();
  for (const auto& f : kraus) {
    if (f.rows() != rows || f.cols() != cols) {
      throw DimensionError("check_complete_positivity: mismatched Kraus dimensions");
    }
    require_finite(f, "check_complete_positivity");
  }

  // Choi of rho -> sum w F rho F' is sum_v w_v vec(F_v) vec(F_v)' with
  // column-stacked vec; min eigenvalue >= 0 iff the map is CP.
  ComplexMatrix choi = ComplexMatrix::Zero(rows * cols, rows * cols);
  for (size_t v = 0; v < kraus.size(); ++v) {
    const double w = weights.empty() ? 1.0 : weights[v];
    Eigen::Map<const ComplexVector> vec(kraus[v].data(), kraus[v].size());
    choi.noalias() += w * (vec * vec.adjoint());
  }
  return choi_report(choi, tol);
}

CpReport check_complete_positivity_superoperator(const ComplexMatrix& superop,
                                                 Eigen::Index dim_in, Eigen::Index dim_out,
                                                 const Tolerances& tol) {
  if (superop.rows() != dim_out * dim_out || superop.cols() != dim_in * dim_in) {
    std::ostringstream os;
    os << "check_complete_positivity: superoperator is " << superop.rows() << "x"
       << superop.cols() << ", expected " << dim_out * dim_out << "x" << dim_in * dim_in;
    throw DimensionError(os.str());
  }
  require_finite(superop, "check_complete_positivity");

  // Choi block (i,j) equals the image of the basis matrix |i><j| under the map.
  ComplexMatrix choi(dim_in * dim_out, dim_in * dim_out);
  for (Eigen::Index i = 0; i < dim_in; ++i) {
    for (Eigen::Index j = 0; j < dim_in; ++j) {
      ComplexMatrix basis = ComplexMatrix::Zero(dim_in, dim_in);
      basis(i, j) = 1.0;
      Eigen::Map<const ComplexVector> vec_in(basis.data(), basis.size());
      ComplexVector image = superop * vec_in;
      choi.block(i * dim_out, j * dim_out, dim_out, dim_out) =
          Eigen::Map<const ComplexMatrix>(image.data(), dim_out, dim_out);
    }
  }
  return choi_report(choi, tol);
}

}  // namespace qfb
