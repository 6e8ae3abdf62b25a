#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "jil/core.hpp"
#include "jil/mlp.hpp"
#include "jil/segment.hpp"

namespace jil {

/// Linear jump interval-learning: ridge costs, penalized segmentation, then
/// the per-interval ridge coefficients of the selected partition.
JilFit fit_ljil(const Dataset& d, int m, double lambda, double gamma,
                bool prune = true);

/// Memoized per-interval network fits. Each interval trains with a seed
/// derived from (cfg.seed, lo, hi), so entries do not depend on the order in
/// which the solver requests them.
class DeepCostCache {
 public:
  struct Entry {
    double cost = 0.0;
    MlpModel model;
  };

  DeepCostCache(const Dataset& d, int m, TrainConfig cfg);

  const Entry& entry(const Interval& iv) const;
  double cost(const Interval& iv) const { return entry(iv).cost; }
  std::size_t size() const;

 private:
  const Dataset* data_;
  int m_;
  TrainConfig cfg_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, int>, Entry> entries_;
};

/// Deep jump interval-learning with lambda fixed at 0.
JilFit fit_djil(const Dataset& d, int m, double gamma, const TrainConfig& cfg,
                bool prune = true);
JilFit fit_djil(const DeepCostCache& cache, int m, double gamma,
                bool prune = true);

/// Objective recomputed from the stored partition and models:
/// sum_I [(1/n) sum (Y - q_I(X))^2 + lambda |I| ||theta_I||^2] + gamma |P|.
double recompute_objective(const Dataset& d, const JilFit& fit);

/// Piecewise coefficient path theta(a) of a linear fit.
std::vector<double> coefficient_at(const JilFit& fit, double a);

/// Default network used for deep fits.
TrainConfig default_train_config();

}  // namespace jil
