#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jil/core.hpp"
#include "jil/linalg.hpp"
#include "jil/random.hpp"

namespace jil {

/// Interval-valued decision rule: the partition interval whose fitted
/// outcome model is largest at x.
class I2dr {
 public:
  explicit I2dr(JilFit fit);

  const JilFit& fit() const { return fit_; }
  std::size_t recommend_index(std::span<const double> x) const;
  Interval recommend(std::span<const double> x) const;
  /// max_I q_I(x)
  double best_value(std::span<const double> x) const;

  static constexpr double kTieTolerance = 1e-12;

 private:
  JilFit fit_;
};

enum class PropensityKind { Multinomial, Empirical };

/// Generalized propensity score e(I | x) over the intervals of a partition.
struct PropensityModel {
  PropensityKind kind = PropensityKind::Multinomial;
  linalg::Matrix weights;      // |P| x (p + 1), multinomial only
  std::vector<double> freqs;   // |P|, empirical only
  Partition partition;
  double floor = 0.01;

  /// Probabilities of every interval at x, floored and summing to one.
  std::vector<double> probabilities(std::span<const double> x) const;
};

struct PropensityOptions {
  PropensityKind kind = PropensityKind::Multinomial;
  int iterations = 500;
  double step = 0.1;
  double l2 = 1e-4;
  double floor = 0.01;
};

PropensityModel fit_propensity(const Dataset& d, const Partition& partition,
                               const PropensityOptions& options = {});

/// Raises every entry to at least `floor` and rescales the rest so the vector
/// still sums to one. Requires floor * size < 1.
void apply_probability_floor(std::vector<double>& probs, double floor);

struct ValueReport {
  double v_hat = 0.0;
  double sigma_hat = 0.0;  // per-observation standard deviation
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  std::size_t n = 0;

  double std_error() const;
};

/// Augmented inverse-propensity value estimate with a Wald interval
/// v_hat +- z_{alpha/2} sigma_hat / sqrt(n).
ValueReport estimate_value(const Dataset& d, const I2dr& rule,
                           const PropensityModel& prop, double alpha);

/// Upper alpha/2 standard normal quantile.
double z_quantile(double alpha);

struct Preference {
  enum class Kind { MinDose, MaxDose, MidPoint, UniformRandom };
  Kind kind = Kind::MidPoint;
  std::uint64_t seed = 0;
};

/// Concrete treatment inside a recommended interval. Uniform draws come from
/// `rng`.
double select_dose(const Interval& iv, const Preference& pref, Rng& rng);

/// Holds the generator for a UniformRandom preference across calls.
class DoseSelector {
 public:
  explicit DoseSelector(Preference pref) : pref_(pref), rng_(pref.seed) {}
  double operator()(const Interval& iv) { return select_dose(iv, pref_, rng_); }

 private:
  Preference pref_;
  Rng rng_;
};

}  // namespace jil
