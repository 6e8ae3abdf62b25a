#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "jil/core.hpp"
#include "jil/mlp.hpp"
#include "jil/policy.hpp"

namespace jil {

enum class Scenario { S1 = 1, S2, S3, S4, S5 };

struct ScenarioSpec {
  Scenario id = Scenario::S1;
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
};

/// Smallest covariate dimension a scenario's outcome model reads.
std::size_t min_covariates(Scenario id);
Scenario scenario_from_int(int id);

/// Ground truth of a scenario: the outcome regression Q(x, a) and what is
/// known about its structure.
class TruthOracle {
 public:
  TruthOracle(Scenario id, std::size_t p);

  Scenario scenario() const { return id_; }
  std::size_t p() const { return p_; }

  double q(std::span<const double> x, double a) const;
  /// sup_a Q(x, a) and a maximizing treatment.
  double optimal_value(std::span<const double> x) const;
  double optimal_dose(std::span<const double> x) const;

  /// Interior change points in a for the piecewise-constant scenarios.
  std::optional<std::vector<double>> change_points() const;
  bool has_theta() const;
  /// Coefficient path theta_0(a) on xbar = (1, x); throws MissingTruth when
  /// the scenario is not linear in x.
  std::vector<double> theta(double a) const;

 private:
  Scenario id_;
  std::size_t p_;
};

/// X ~ Unif[-1, 1]^p, A ~ Unif[0, 1], Y = Q(X, A) + N(0, 1); draws per row in
/// the order x_1..x_p, a, noise.
std::pair<Dataset, TruthOracle> gen_scenario(const ScenarioSpec& spec);

/// Monte Carlo E[sup_a Q(X, a)].
double true_optimal_value(const ScenarioSpec& spec, std::size_t n_mc,
                          std::uint64_t seed);

/// Monte Carlo value of a rule under a dose preference, on the noise-free Q.
double policy_value_mc(const I2dr& rule, const Preference& pref,
                       const ScenarioSpec& spec, std::size_t n_mc,
                       std::uint64_t seed);

/// Midpoint-rule integral of ||theta_hat(a) - theta_0(a)||^2 over [0, 1].
double integrated_l2_loss(const JilFit& fit, const TruthOracle& oracle,
                          std::size_t n_quad = 10000);

/// Reference optimal values used as coverage targets.
double reference_optimal_value(Scenario id);

struct ReplicationConfig {
  Scenario scenario = Scenario::S1;
  std::size_t n = 800;
  std::size_t p = 4;
  std::size_t reps = 100;
  Method method = Method::Linear;
  double c = 5.0;
  double lambda = 0.0;
  std::optional<double> gamma;  // default_gamma(n) when empty
  double alpha = 0.05;
  std::uint64_t seed = 0;
  TrainConfig train = {};
};

struct ReplicationRecord {
  double v_hat = 0.0;
  double std_error = 0.0;
  bool covered = false;
  std::size_t partitions = 0;
  std::vector<int> boundaries;
  int m = 1;
  double l2_loss = 0.0;  // NaN without a coefficient truth
};

struct ReplicationSummary {
  double mean_value = 0.0;
  double mean_std_error = 0.0;
  double coverage = 0.0;  // percent
  double mean_partitions = 0.0;
  double mean_l2_loss = 0.0;  // NaN without a coefficient truth
  double optimal_value = 0.0;
  std::vector<ReplicationRecord> records;
};

/// Simulate -> fit with m = n / c -> value estimate and Wald interval, per
/// replication. Replication r uses the substream mix_seed(seed, r), so the
/// result does not depend on the worker count.
ReplicationSummary replicate(const ReplicationConfig& cfg);

/// Scenario 1, p = 4, linear method with lambda = 0 and the default gamma.
ReplicationSummary replicate_table1(std::size_t reps, std::size_t n,
                                    std::uint64_t seed);

}  // namespace jil
