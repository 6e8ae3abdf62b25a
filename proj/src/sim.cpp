#include "jil/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "jil/fit.hpp"
#include "jil/parallel.hpp"
#include "jil/random.hpp"
#include "jil/tuning.hpp"

namespace jil {

namespace {

double cov(std::span<const double> x, std::size_t j) { return x[j - 1]; }

// Branch breakpoints and per-branch values of the piecewise scenarios.
std::vector<double> branch_breaks(Scenario id) {
  switch (id) {
    case Scenario::S1:
    case Scenario::S2: return {0.35, 0.65};
    case Scenario::S3: return {0.25, 0.5, 0.75};
    default: return {};
  }
}

std::vector<double> branch_values(Scenario id, std::span<const double> x) {
  const double x1 = cov(x, 1);
  const double x2 = cov(x, 2);
  switch (id) {
    case Scenario::S1: return {1.0 + x1, x1 - x2, 1.0 - x2};
    case Scenario::S2:
      return {1.0 + x1 * x1 * x1, x1 - std::log(1.5 + x2),
              1.0 - std::sin(0.5 * std::numbers::pi * x2)};
    case Scenario::S3: {
      const double t = x1 + x2 - 0.75;
      return {std::sqrt(x1 / 2.0 + 0.5), std::sin(2.0 * std::numbers::pi * x2),
              0.5 - t * t, 0.5};
    }
    default: return {};
  }
}

double s4_index(std::span<const double> x) {
  // xbar^T theta* with theta* = (1, 2, -2, 0, ...)
  return 1.0 + 2.0 * cov(x, 1) - 2.0 * cov(x, 2);
}

std::size_t branch_of(const std::vector<double>& breaks, double a) {
  std::size_t k = 0;
  while (k < breaks.size() && a >= breaks[k]) ++k;
  return k;
}

std::size_t model_inputs(const JilFit& fit) {
  const auto& model = fit.models.front();
  if (const auto* lin = std::get_if<LinearModel>(&model)) return lin->theta.size() - 1;
  return std::get<MlpModel>(model).layer_sizes.front();
}

void draw_covariates(Rng& rng, std::span<double> x) {
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
}

}  // namespace

std::size_t min_covariates(Scenario id) {
  return id == Scenario::S5 ? 3 : 2;
}

Scenario scenario_from_int(int id) {
  if (id < 1 || id > 5) {
    std::ostringstream os;
    os << "unknown scenario " << id << " (expected 1..5)";
    throw Error(ErrorKind::BadSpec, os.str());
  }
  return static_cast<Scenario>(id);
}

TruthOracle::TruthOracle(Scenario id, std::size_t p) : id_(id), p_(p) {
  if (p < min_covariates(id)) {
    std::ostringstream os;
    os << "scenario " << static_cast<int>(id) << " needs p >= " << min_covariates(id);
    throw Error(ErrorKind::BadSpec, os.str());
  }
}

double TruthOracle::q(std::span<const double> x, double a) const {
  switch (id_) {
    case Scenario::S1:
    case Scenario::S2:
    case Scenario::S3:
      return branch_values(id_, x)[branch_of(branch_breaks(id_), a)];
    case Scenario::S4:
      return 2.0 * std::abs(a - 0.5) * s4_index(x);
    case Scenario::S5: {
      const double x1 = cov(x, 1), x2 = cov(x, 2), x3 = cov(x, 3);
      const double t = 1.0 + 0.5 * x1 + 0.5 * x2 - 2.0 * a;
      return 8.0 + 4.0 * x1 - 2.0 * x2 - 2.0 * x3 - 10.0 * t * t;
    }
  }
  return 0.0;
}

double TruthOracle::optimal_dose(std::span<const double> x) const {
  switch (id_) {
    case Scenario::S1:
    case Scenario::S2:
    case Scenario::S3: {
      const auto values = branch_values(id_, x);
      const auto breaks = branch_breaks(id_);
      const auto best = static_cast<std::size_t>(
          std::max_element(values.begin(), values.end()) - values.begin());
      const double lo = best == 0 ? 0.0 : breaks[best - 1];
      const double hi = best == breaks.size() ? 1.0 : breaks[best];
      return 0.5 * (lo + hi);
    }
    case Scenario::S4:
      // 2|a - 0.5| in [0, 1]: take a = 0 when the index is non-negative
      // (a = 1 is value-equivalent), otherwise zero it out at a = 0.5
      return s4_index(x) < 0.0 ? 0.5 : 0.0;
    case Scenario::S5:
      return std::clamp(0.5 + 0.25 * (cov(x, 1) + cov(x, 2)), 0.0, 1.0);
  }
  return 0.0;
}

double TruthOracle::optimal_value(std::span<const double> x) const {
  switch (id_) {
    case Scenario::S1:
    case Scenario::S2:
    case Scenario::S3: {
      const auto values = branch_values(id_, x);
      return *std::max_element(values.begin(), values.end());
    }
    case Scenario::S4:
      return std::max(0.0, s4_index(x));
    case Scenario::S5:
      return q(x, optimal_dose(x));
  }
  return 0.0;
}

std::optional<std::vector<double>> TruthOracle::change_points() const {
  if (id_ == Scenario::S4 || id_ == Scenario::S5) return std::nullopt;
  return branch_breaks(id_);
}

bool TruthOracle::has_theta() const {
  return id_ == Scenario::S1 || id_ == Scenario::S4;
}

std::vector<double> TruthOracle::theta(double a) const {
  std::vector<double> out(p_ + 1, 0.0);
  if (id_ == Scenario::S1) {
    switch (branch_of(branch_breaks(id_), a)) {
      case 0: out[0] = 1.0; out[1] = 1.0; break;
      case 1: out[1] = 1.0; out[2] = -1.0; break;
      default: out[0] = 1.0; out[2] = -1.0; break;
    }
    return out;
  }
  if (id_ == Scenario::S4) {
    const double w = 2.0 * std::abs(a - 0.5);
    out[0] = w;
    out[1] = 2.0 * w;
    out[2] = -2.0 * w;
    return out;
  }
  throw Error(ErrorKind::MissingTruth,
              "scenario has no linear coefficient path");
}

std::pair<Dataset, TruthOracle> gen_scenario(const ScenarioSpec& spec) {
  if (spec.n < 1) throw Error(ErrorKind::BadSpec, "n must be >= 1");
  TruthOracle oracle(spec.id, spec.p);
  Dataset d;
  d.n = spec.n;
  d.p = spec.p;
  d.covariates.resize(spec.n * spec.p);
  d.treatments.resize(spec.n);
  d.outcomes.resize(spec.n);
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::span<double> x(d.covariates.data() + i * spec.p, spec.p);
    draw_covariates(rng, x);
    const double a = rng.uniform();
    const double noise = rng.normal();
    d.treatments[i] = a;
    d.outcomes[i] = oracle.q(x, a) + noise;
  }
  return {std::move(d), oracle};
}

double true_optimal_value(const ScenarioSpec& spec, std::size_t n_mc,
                          std::uint64_t seed) {
  if (n_mc < 1000) throw Error(ErrorKind::BadSpec, "n_mc must be at least 1000");
  const TruthOracle oracle(spec.id, spec.p);
  Rng rng(seed);
  std::vector<double> x(spec.p);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    draw_covariates(rng, x);
    sum += oracle.optimal_value(x);
  }
  return sum / static_cast<double>(n_mc);
}

double policy_value_mc(const I2dr& rule, const Preference& pref,
                       const ScenarioSpec& spec, std::size_t n_mc,
                       std::uint64_t seed) {
  if (model_inputs(rule.fit()) != spec.p) {
    throw Error(ErrorKind::DimensionMismatch,
                "rule covariate dimension differs from the scenario");
  }
  const TruthOracle oracle(spec.id, spec.p);
  Rng rng(seed);
  DoseSelector dose(pref);
  std::vector<double> x(spec.p);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    draw_covariates(rng, x);
    sum += oracle.q(x, dose(rule.recommend(x)));
  }
  return sum / static_cast<double>(n_mc);
}

double integrated_l2_loss(const JilFit& fit, const TruthOracle& oracle,
                          std::size_t n_quad) {
  if (!oracle.has_theta()) {
    throw Error(ErrorKind::MissingTruth, "oracle has no coefficient path");
  }
  if (fit.method != Method::Linear) {
    throw std::invalid_argument("integrated loss needs a linear fit");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n_quad; ++k) {
    const double a = (static_cast<double>(k) + 0.5) / static_cast<double>(n_quad);
    const auto est = coefficient_at(fit, a);
    const auto truth = oracle.theta(a);
    double d2 = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double diff = est[j] - truth[j];
      d2 += diff * diff;
    }
    total += d2;
  }
  return total / static_cast<double>(n_quad);
}

double reference_optimal_value(Scenario id) {
  switch (id) {
    case Scenario::S1: return 1.34;
    case Scenario::S2: return 1.35;
    case Scenario::S3: return 0.76;
    case Scenario::S4: return 1.28;
    case Scenario::S5: return 8.0;
  }
  return 0.0;
}

ReplicationSummary replicate(const ReplicationConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("need at least one replication");
  ReplicationSummary summary;
  summary.optimal_value = reference_optimal_value(cfg.scenario);
  summary.records.resize(cfg.reps);
  const double gamma = cfg.gamma.value_or(default_gamma(cfg.n));
  const int m = make_grid(cfg.n, cfg.c);

  // one slot per replication; aggregation below runs in index order
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    const ScenarioSpec spec{cfg.scenario, cfg.n, cfg.p, mix_seed(cfg.seed, r)};
    auto [data, oracle] = gen_scenario(spec);
    JilFit fit;
    if (cfg.method == Method::Linear) {
      fit = fit_ljil(data, m, cfg.lambda, gamma);
    } else {
      TrainConfig train = cfg.train;
      train.seed = mix_seed(spec.seed, 0xd11);
      fit = fit_djil(data, m, gamma, train);
    }
    const PropensityModel prop = fit_propensity(data, fit.partition);
    ReplicationRecord rec;
    rec.m = m;
    rec.partitions = fit.partition.size();
    rec.boundaries = fit.partition.interior_boundaries();
    rec.l2_loss = (cfg.method == Method::Linear && oracle.has_theta())
                      ? integrated_l2_loss(fit, oracle)
                      : std::numeric_limits<double>::quiet_NaN();
    const I2dr rule(std::move(fit));
    const ValueReport value = estimate_value(data, rule, prop, cfg.alpha);
    rec.v_hat = value.v_hat;
    rec.std_error = value.std_error();
    rec.covered = value.ci_lo <= summary.optimal_value &&
                  summary.optimal_value <= value.ci_hi;
    summary.records[r] = std::move(rec);
  }

  const double reps = static_cast<double>(cfg.reps);
  double covered = 0.0;
  for (const auto& rec : summary.records) {
    summary.mean_value += rec.v_hat;
    summary.mean_std_error += rec.std_error;
    summary.mean_partitions += static_cast<double>(rec.partitions);
    summary.mean_l2_loss += rec.l2_loss;
    covered += rec.covered ? 1.0 : 0.0;
  }
  summary.mean_value /= reps;
  summary.mean_std_error /= reps;
  summary.mean_partitions /= reps;
  summary.mean_l2_loss /= reps;
  summary.coverage = 100.0 * covered / reps;
  return summary;
}

ReplicationSummary replicate_table1(std::size_t reps, std::size_t n,
                                    std::uint64_t seed) {
  if (reps < 50) throw Error(ErrorKind::BadSpec, "the Scenario 1 driver needs at least 50 replications");
  ReplicationConfig cfg;
  cfg.scenario = Scenario::S1;
  cfg.n = n;
  cfg.p = 4;
  cfg.reps = reps;
  cfg.seed = seed;
  return replicate(cfg);
}

}  // namespace jil
