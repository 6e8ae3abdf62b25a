#include "jil/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jil/cost.hpp"
#include "jil/random.hpp"

namespace jil {

JilFit fit_ljil(const Dataset& d, int m, double lambda, double gamma,
                bool prune) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidPenalty, "ridge penalty must be >= 0");
  }
  CostCache cache(d, m, {lambda});
  const CostFn costfn = [&](const Interval& iv) { return cache.cost_at(iv, 0); };
  Segmentation seg = pelt(costfn, m, gamma, prune);

  JilFit fit;
  fit.partition = seg.partition;
  fit.m = m;
  fit.lambda = lambda;
  fit.gamma = gamma;
  fit.objective = seg.objective;
  fit.method = Method::Linear;
  for (const auto& iv : seg.partition.intervals()) {
    fit.models.emplace_back(LinearModel{cache.theta(iv, 0)});
  }
  return fit;
}

DeepCostCache::DeepCostCache(const Dataset& d, int m, TrainConfig cfg)
    : data_(&d), m_(m), cfg_(std::move(cfg)) {}

const DeepCostCache::Entry& DeepCostCache::entry(const Interval& iv) const {
  const auto key = std::make_pair(iv.lo, iv.hi);
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  TrainConfig cfg = cfg_;
  cfg.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(iv.lo) *
                                     static_cast<std::uint64_t>(m_ + 1) +
                                     static_cast<std::uint64_t>(iv.hi));
  Entry fresh;
  const auto rows = rows_in(*data_, iv);
  if (rows.empty()) {
    // empty interval: zero cost and a network that predicts 0
    fresh.model = mlp_init(data_->p, cfg.hidden, cfg.seed);
    for (auto& w : fresh.model.weights) std::fill(w.begin(), w.end(), 0.0);
  } else {
    fresh.model = mlp_train_rows(*data_, rows, cfg);
    fresh.cost = mlp_mse(fresh.model, *data_, rows) *
                 static_cast<double>(rows.size()) /
                 static_cast<double>(data_->n);
  }
  std::lock_guard lock(mutex_);
  return entries_.try_emplace(key, std::move(fresh)).first->second;
}

std::size_t DeepCostCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

JilFit fit_djil(const DeepCostCache& cache, int m, double gamma, bool prune) {
  const CostFn costfn = [&](const Interval& iv) { return cache.cost(iv); };
  Segmentation seg = pelt(costfn, m, gamma, prune);
  JilFit fit;
  fit.partition = seg.partition;
  fit.m = m;
  fit.lambda = 0.0;
  fit.gamma = gamma;
  fit.objective = seg.objective;
  fit.method = Method::Deep;
  for (const auto& iv : seg.partition.intervals()) {
    fit.models.emplace_back(cache.entry(iv).model);
  }
  return fit;
}

JilFit fit_djil(const Dataset& d, int m, double gamma, const TrainConfig& cfg,
                bool prune) {
  DeepCostCache cache(d, m, cfg);
  return fit_djil(cache, m, gamma, prune);
}

double recompute_objective(const Dataset& d, const JilFit& fit) {
  const std::size_t k = fit.partition.size();
  std::vector<double> sse(k, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const std::size_t seg = fit.partition.locate(d.treatments[i]);
    const double r = d.outcomes[i] - predict(fit.models[seg], d.row(i));
    sse[seg] += r * r;
  }
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    double term = sse[s] / static_cast<double>(d.n);
    if (const auto* lin = std::get_if<LinearModel>(&fit.models[s])) {
      double norm2 = 0.0;
      for (double t : lin->theta) norm2 += t * t;
      term += fit.lambda * fit.partition[s].length() * norm2;
    }
    total += term;
  }
  return total + fit.gamma * static_cast<double>(k);
}

std::vector<double> coefficient_at(const JilFit& fit, double a) {
  const auto& model = fit.models.at(fit.partition.locate(a));
  const auto* lin = std::get_if<LinearModel>(&model);
  if (!lin) throw std::logic_error("coefficient path needs a linear fit");
  return lin->theta;
}

TrainConfig default_train_config() { return TrainConfig{}; }

}  // namespace jil
