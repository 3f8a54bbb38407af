#include "qfb/instrument.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace qfb {

std::string Outcome::str() const {
  if (parts.size() == 1) return std::to_string(parts.front());
  std::string s = "(";
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(parts[i]);
  }
  s += ")";
  return s;
}

Instrument::Instrument(std::vector<Outcome> outcomes, std::vector<ComplexMatrix> kraus,
                       std::vector<double> weights, const Tolerances& tol)
    : outcomes_(std::move(outcomes)), kraus_(std::move(kraus)), weights_(std::move(weights)),
      tol_(tol) {
  if (kraus_.empty()) throw DimensionError("Instrument: empty Kraus family");
  if (outcomes_.size() != kraus_.size()) {
    throw DimensionError("Instrument: outcome count does not match Kraus count");
  }
  if (weights_.empty()) {
    weights_.assign(kraus_.size(), 1.0);  // counting measure
  } else if (weights_.size() != kraus_.size()) {
    throw DimensionError("Instrument: weight count does not match Kraus count");
  }
  const Eigen::Index rows = kraus_.front().rows();
  const Eigen::Index cols = kraus_.front().cols();
  for (const auto& f : kraus_) {
    if (f.rows() != rows || f.cols() != cols) {
      throw DimensionError("Instrument: mismatched Kraus dimensions");
    }
    if (!all_finite(f)) throw InvariantError("Instrument: non-finite Kraus entries");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InvariantError("Instrument: weights must be positive and finite");
    }
  }
  std::set<Outcome> distinct(outcomes_.begin(), outcomes_.end());
  if (distinct.size() != outcomes_.size()) {
    throw InvariantError("Instrument: outcome labels must be distinct");
  }
}

Instrument Instrument::from_kraus(std::vector<ComplexMatrix> kraus, const Tolerances& tol) {
  std::vector<Outcome> labels;
  labels.reserve(kraus.size());
  for (size_t i = 0; i < kraus.size(); ++i) labels.emplace_back(static_cast<int>(i));
  return Instrument(std::move(labels), std::move(kraus), {}, tol);
}

size_t Instrument::index_of(const Outcome& v) const {
  const auto it = std::find(outcomes_.begin(), outcomes_.end(), v);
  if (it == outcomes_.end()) {
    throw ConfigError("Instrument: unknown outcome label " + v.str());
  }
  return static_cast<size_t>(it - outcomes_.begin());
}

InstrumentValidation validate_instrument(const Instrument& ins) {
  const Eigen::Index d = ins.dim_in();
  ComplexMatrix acc = ComplexMatrix::Zero(d, d);
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(ins.size());
  std::vector<double> weights;
  weights.reserve(ins.size());
  for (size_t i = 0; i < ins.size(); ++i) {
    acc.noalias() += ins.weight(i) * (ins.kraus(i).adjoint() * ins.kraus(i));
    kraus.push_back(ins.kraus(i));
    weights.push_back(ins.weight(i));
  }
  InstrumentValidation report;
  report.normalization_residual = max_abs(acc - ComplexMatrix::Identity(d, d));
  report.cp = check_complete_positivity(kraus, weights, ins.tolerances());
  report.pass =
      report.normalization_residual <= ins.tolerances().normalization && report.cp.pass;
  return report;
}

Instrument compose(const Instrument& first, const Instrument& second) {
  if (first.dim_out() != second.dim_in()) {
    std::ostringstream os;
    os << "compose: first instrument emits dimension " << first.dim_out()
       << " but second expects " << second.dim_in();
    throw DimensionError(os.str());
  }
  std::vector<Outcome> outcomes;
  std::vector<ComplexMatrix> kraus;
  std::vector<double> weights;
  outcomes.reserve(first.size() * second.size());
  kraus.reserve(first.size() * second.size());
  weights.reserve(first.size() * second.size());
  // First outcome varies slowest; labels flatten chronologically.
  for (size_t i = 0; i < first.size(); ++i) {
    for (size_t j = 0; j < second.size(); ++j) {
      std::vector<int> parts = first.outcome(i).parts;
      parts.insert(parts.end(), second.outcome(j).parts.begin(), second.outcome(j).parts.end());
      outcomes.emplace_back(std::move(parts));
      kraus.emplace_back(second.kraus(j) * first.kraus(i));
      weights.push_back(first.weight(i) * second.weight(j));
    }
  }
  return Instrument(std::move(outcomes), std::move(kraus), std::move(weights),
                    first.tolerances());
}

DensityOperator apriori_channel(const Instrument& ins, const DensityOperator& rho) {
  if (rho.dim() != ins.dim_in()) {
    throw DimensionError("apriori_channel: state dimension does not match instrument");
  }
  ComplexMatrix out = ComplexMatrix::Zero(ins.dim_out(), ins.dim_out());
  for (size_t i = 0; i < ins.size(); ++i) {
    out.noalias() += ins.weight(i) * (ins.kraus(i) * rho.matrix() * ins.kraus(i).adjoint());
  }
  return DensityOperator(std::move(out), ins.tolerances());
}

namespace {

OutcomeDistribution finish_distribution(const Instrument& ins, std::vector<double> probs) {
  const Tolerances& tol = ins.tolerances();
  double sum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < -tol.psd) {
      std::ostringstream os;
      os << "outcome_probabilities: branch " << ins.outcome(i).str() << " has probability "
         << probs[i];
      throw NumericsError(os.str());
    }
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > tol.normalization) {
    std::ostringstream os;
    os << "outcome_probabilities: probabilities sum to " << sum
       << " (is the instrument normalized?)";
    throw NumericsError(os.str());
  }
  for (double& p : probs) p = std::clamp(p, 0.0, 1.0);
  return OutcomeDistribution{ins.outcomes(), std::move(probs)};
}

}  // namespace

OutcomeDistribution outcome_probabilities(const Instrument& ins, const DensityOperator& rho) {
  if (rho.dim() != ins.dim_in()) {
    throw DimensionError("outcome_probabilities: state dimension does not match instrument");
  }
  std::vector<double> probs(ins.size());
  for (size_t i = 0; i < ins.size(); ++i) {
    // w tr{F rho F'} = w tr{F'F rho}
    const Complex t = (ins.kraus(i) * rho.matrix() * ins.kraus(i).adjoint()).trace();
    probs[i] = ins.weight(i) * t.real();
  }
  return finish_distribution(ins, std::move(probs));
}

OutcomeDistribution outcome_probabilities(const Instrument& ins, const Ket& psi) {
  if (psi.dim() != ins.dim_in()) {
    throw DimensionError("outcome_probabilities: state dimension does not match instrument");
  }
  std::vector<double> probs(ins.size());
  for (size_t i = 0; i < ins.size(); ++i) {
    probs[i] = ins.weight(i) * (ins.kraus(i) * psi.amplitudes()).squaredNorm();
  }
  return finish_distribution(ins, std::move(probs));
}

DensityOperator posterior_density_by_index(const Instrument& ins, const DensityOperator& rho,
                                           size_t index) {
  if (rho.dim() != ins.dim_in()) {
    throw DimensionError("posterior_density: state dimension does not match instrument");
  }
  ComplexMatrix branch = ins.kraus(index) * rho.matrix() * ins.kraus(index).adjoint();
  const double p = ins.weight(index) * branch.trace().real();
  if (p <= ins.tolerances().zero_probability_floor) {
    std::ostringstream os;
    os << "posterior_density: outcome " << ins.outcome(index).str() << " has probability " << p
       << ", below the floor";
    throw ZeroProbabilityError(os.str(), ins.outcome(index).str());
  }
  branch /= branch.trace().real();
  return DensityOperator(std::move(branch), ins.tolerances());
}

DensityOperator posterior_density(const Instrument& ins, const DensityOperator& rho,
                                  const Outcome& v) {
  return posterior_density_by_index(ins, rho, ins.index_of(v));
}

Ket posterior_ket_by_index(const Instrument& ins, const Ket& psi, size_t index) {
  if (psi.dim() != ins.dim_in()) {
    throw DimensionError("posterior_ket: state dimension does not match instrument");
  }
  ComplexVector branch = ins.kraus(index) * psi.amplitudes();
  const double p = ins.weight(index) * branch.squaredNorm();
  if (p <= ins.tolerances().zero_probability_floor) {
    std::ostringstream os;
    os << "posterior_ket: outcome " << ins.outcome(index).str() << " has probability " << p
       << ", below the floor";
    throw ZeroProbabilityError(os.str(), ins.outcome(index).str());
  }
  branch /= branch.norm();
  return Ket(std::move(branch), ins.tolerances());
}

Ket posterior_ket(const Instrument& ins, const Ket& psi, const Outcome& v) {
  return posterior_ket_by_index(ins, psi, ins.index_of(v));
}

}  // namespace qfb
