#include "jil/policy.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

namespace jil {

I2dr::I2dr(JilFit fit) : fit_(std::move(fit)) {
  if (fit_.models.size() != fit_.partition.size()) {
    throw std::invalid_argument("fit has a model count different from |P|");
  }
}

std::size_t I2dr::recommend_index(std::span<const double> x) const {
  std::size_t best = 0;
  double best_q = predict(fit_.models[0], x);
  for (std::size_t k = 1; k < fit_.models.size(); ++k) {
    const double q = predict(fit_.models[k], x);
    // intervals are ordered by lo, so keeping the earlier one on a tie
    // returns the interval with the smallest treatment
    if (q > best_q + kTieTolerance) {
      best = k;
      best_q = q;
    }
  }
  return best;
}

Interval I2dr::recommend(std::span<const double> x) const {
  return fit_.partition[recommend_index(x)];
}

double I2dr::best_value(std::span<const double> x) const {
  double best = predict(fit_.models[0], x);
  for (std::size_t k = 1; k < fit_.models.size(); ++k) {
    best = std::max(best, predict(fit_.models[k], x));
  }
  return best;
}

void apply_probability_floor(std::vector<double>& probs, double floor) {
  const std::size_t k = probs.size();
  if (k == 0) return;
  if (floor * static_cast<double>(k) >= 1.0) {
    throw std::invalid_argument("probability floor is infeasible");
  }
  std::vector<bool> pinned(k, false);
  for (std::size_t pass = 0; pass <= k; ++pass) {
    double free_mass = 0.0;
    std::size_t pinned_count = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (pinned[i]) ++pinned_count;
      else free_mass += probs[i];
    }
    const double target = 1.0 - floor * static_cast<double>(pinned_count);
    bool changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (pinned[i]) {
        probs[i] = floor;
        continue;
      }
      probs[i] = free_mass > 0.0 ? probs[i] * target / free_mass
                                 : target / static_cast<double>(k - pinned_count);
      if (probs[i] < floor) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

std::vector<double> PropensityModel::probabilities(std::span<const double> x) const {
  const std::size_t k = partition.size();
  if (k == 1) return {1.0};
  std::vector<double> probs(k);
  if (kind == PropensityKind::Empirical) {
    probs = freqs;
  } else {
    if (x.size() + 1 != weights.cols()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "covariate length does not match the propensity model");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double s = weights(c, 0);
      for (std::size_t j = 0; j < x.size(); ++j) s += weights(c, j + 1) * x[j];
      probs[c] = s;
      top = std::max(top, s);
    }
    double total = 0.0;
    for (double& v : probs) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : probs) v /= total;
  }
  apply_probability_floor(probs, std::min(floor, 0.5 / static_cast<double>(k)));
  return probs;
}

PropensityModel fit_propensity(const Dataset& d, const Partition& partition,
                               const PropensityOptions& options) {
  if (partition.size() == 0) {
    throw Error(ErrorKind::DegeneratePartition, "partition is empty");
  }
  PropensityModel model;
  model.kind = options.kind;
  model.partition = partition;
  model.floor = options.floor;
  const std::size_t k = partition.size();
  const std::size_t dim = d.p + 1;
  model.weights = linalg::Matrix(k, dim);

  std::vector<std::size_t> label(d.n);
  for (std::size_t i = 0; i < d.n; ++i) label[i] = partition.locate(d.treatments[i]);

  if (options.kind == PropensityKind::Empirical) {
    model.freqs.assign(k, 0.0);
    for (std::size_t i = 0; i < d.n; ++i) model.freqs[label[i]] += 1.0;
    for (double& f : model.freqs) f /= static_cast<double>(std::max<std::size_t>(d.n, 1));
    return model;
  }
  if (k == 1 || d.n == 0) return model;

  // full-batch gradient descent on the multinomial log-loss, zero start
  std::vector<double> logits(k);
  linalg::Matrix grad(k, dim);
  for (int it = 0; it < options.iterations; ++it) {
    std::fill(grad.data().begin(), grad.data().end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      auto x = d.row(i);
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double s = model.weights(c, 0);
        for (std::size_t j = 0; j < d.p; ++j) s += model.weights(c, j + 1) * x[j];
        logits[c] = s;
        top = std::max(top, s);
      }
      double total = 0.0;
      for (double& v : logits) {
        v = std::exp(v - top);
        total += v;
      }
      for (std::size_t c = 0; c < k; ++c) {
        const double residual = logits[c] / total - (label[i] == c ? 1.0 : 0.0);
        grad(c, 0) += residual;
        for (std::size_t j = 0; j < d.p; ++j) grad(c, j + 1) += residual * x[j];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(d.n);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double g = grad(c, j) * inv_n + 2.0 * options.l2 * model.weights(c, j);
        model.weights(c, j) -= options.step * g;
      }
    }
  }
  return model;
}

double ValueReport::std_error() const {
  return n > 0 ? sigma_hat / std::sqrt(static_cast<double>(n)) : 0.0;
}

double z_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, alpha / 2.0));
}

ValueReport estimate_value(const Dataset& d, const I2dr& rule,
                           const PropensityModel& prop, double alpha) {
  if (d.n < 2) {
    throw Error(ErrorKind::InsufficientData, "value estimation needs n >= 2");
  }
  if (!(prop.partition == rule.fit().partition)) {
    throw std::invalid_argument("propensity and rule use different partitions");
  }
  const double z = z_quantile(alpha);
  std::vector<double> terms(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    auto x = d.row(i);
    const std::size_t chosen = rule.recommend_index(x);
    const double q_max = rule.best_value(x);
    double term = q_max;
    if (rule.fit().partition[chosen].contains(d.treatments[i])) {
      const double e = prop.probabilities(x)[chosen];
      term += (d.outcomes[i] - q_max) / e;
    }
    terms[i] = term;
  }
  ValueReport report;
  report.alpha = alpha;
  report.n = d.n;
  double sum = 0.0;
  for (double t : terms) sum += t;
  report.v_hat = sum / static_cast<double>(d.n);
  double ss = 0.0;
  for (double t : terms) ss += (t - report.v_hat) * (t - report.v_hat);
  report.sigma_hat = std::sqrt(ss / static_cast<double>(d.n - 1));
  const double half = z * report.std_error();
  report.ci_lo = report.v_hat - half;
  report.ci_hi = report.v_hat + half;
  return report;
}

double select_dose(const Interval& iv, const Preference& pref, Rng& rng) {
  switch (pref.kind) {
    case Preference::Kind::MinDose: return iv.left();
    case Preference::Kind::MaxDose: return iv.hi == iv.m ? 1.0 : iv.right();
    case Preference::Kind::MidPoint:
      return static_cast<double>(iv.lo + iv.hi) / (2.0 * iv.m);
    case Preference::Kind::UniformRandom:
      return iv.left() + iv.length() * rng.uniform();
  }
  return iv.left();
}

}  // namespace jil
