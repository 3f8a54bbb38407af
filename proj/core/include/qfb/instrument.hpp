#pragma once

#include <string>
#include <vector>

#include "qfb/qcore.hpp"

namespace qfb {

/// Outcome label of an instrument. A single measurement produces a one-part
/// label; composed instruments carry the per-interval labels flattened in
/// chronological order, e.g. (0,1) for "0 then 1".
struct Outcome {
  std::vector<int> parts;

  Outcome() = default;
  explicit Outcome(int v) : parts{v} {}
  explicit Outcome(std::vector<int> p) : parts(std::move(p)) {}

  bool operator==(const Outcome& o) const { return parts == o.parts; }
  bool operator<(const Outcome& o) const { return parts < o.parts; }

  std::string str() const;
};

/// Kraus-form instrument over a finite outcome set: one operator F_v and one
/// positive weight w_v per outcome (weights default to the counting measure).
/// Normalization sum_v w_v F_v' F_v = I is reported by validate_instrument,
/// not enforced at construction, so that defective inputs can be diagnosed.
class Instrument {
 public:
  Instrument(std::vector<Outcome> outcomes, std::vector<ComplexMatrix> kraus,
             std::vector<double> weights = {}, const Tolerances& tol = {});

  /// Counting-measure instrument with labels 0..n-1.
  static Instrument from_kraus(std::vector<ComplexMatrix> kraus, const Tolerances& tol = {});

  size_t size() const { return kraus_.size(); }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  const Outcome& outcome(size_t i) const { return outcomes_[i]; }
  const ComplexMatrix& kraus(size_t i) const { return kraus_[i]; }
  double weight(size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  Eigen::Index dim_in() const { return kraus_.front().cols(); }
  Eigen::Index dim_out() const { return kraus_.front().rows(); }

  /// Index of an outcome label; ConfigError if the label does not exist.
  size_t index_of(const Outcome& v) const;

  const Tolerances& tolerances() const { return tol_; }

 private:
  std::vector<Outcome> outcomes_;
  std::vector<ComplexMatrix> kraus_;
  std::vector<double> weights_;
  Tolerances tol_;
};

struct InstrumentValidation {
  double normalization_residual = 0.0;
  CpReport cp;
  bool pass = false;
};

/// Reports ||sum w F'F - I||_max against the normalization gate and runs the
/// Choi test on the weighted Kraus family.
InstrumentValidation validate_instrument(const Instrument& ins);

/// Chronological composition: `first` acts, then `second`. Outcome labels are
/// flattened tuples (v, v'), ordered with the first outcome varying slowest;
/// Kraus operators compose as F'_{v'} F_v and weights multiply.
Instrument compose(const Instrument& first, const Instrument& second);

/// A priori channel sum_v w_v F_v rho F_v' (the observation is discarded).
DensityOperator apriori_channel(const Instrument& ins, const DensityOperator& rho);

struct OutcomeDistribution {
  std::vector<Outcome> outcomes;
  std::vector<double> probabilities;
};

/// p_v = w_v tr{F_v rho F_v'}; checked to sum to 1 within the normalization
/// gate, then clipped to [0,1].
OutcomeDistribution outcome_probabilities(const Instrument& ins, const DensityOperator& rho);

/// Vector-state specialization, p_v = w_v ||F_v psi||^2.
OutcomeDistribution outcome_probabilities(const Instrument& ins, const Ket& psi);

/// F_v rho F_v' / tr{F_v rho F_v'}; defined only on branches whose probability
/// exceeds the zero-probability floor.
DensityOperator posterior_density(const Instrument& ins, const DensityOperator& rho,
                                  const Outcome& v);
DensityOperator posterior_density_by_index(const Instrument& ins, const DensityOperator& rho,
                                           size_t index);

/// F_v psi / ||F_v psi||. Global phase is whatever the formula produces.
Ket posterior_ket(const Instrument& ins, const Ket& psi, const Outcome& v);
Ket posterior_ket_by_index(const Instrument& ins, const Ket& psi, size_t index);

}  // namespace qfb
