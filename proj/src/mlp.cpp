#include "jil/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jil/random.hpp"

namespace jil {

namespace {

std::size_t layer_count(const MlpModel& model) { return model.weights.size(); }

void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.layer_sizes.front()) {
    throw Error(ErrorKind::DimensionMismatch,
                "input length does not match the network");
  }
}

// Stores pre-activations z[l] and activations a[l] (a[0] = x).
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

Trace forward(const MlpModel& model, std::span<const double> x) {
  const std::size_t layers = layer_count(model);
  Trace t;
  t.act.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const auto& w = model.weights[l];
    const auto& prev = t.act.back();
    std::vector<double> z(model.biases[l]);
    for (std::size_t r = 0; r < out; ++r) {
      double s = z[r];
      for (std::size_t c = 0; c < in; ++c) s += w[r * in + c] * prev[c];
      z[r] = s;
    }
    std::vector<double> a = z;
    if (l + 1 < layers) {
      for (double& v : a) v = std::max(0.0, v);
    }
    t.pre.push_back(std::move(z));
    t.act.push_back(std::move(a));
  }
  return t;
}

// Backpropagates d loss / d output = upstream, accumulating into grad.
void backward(const MlpModel& model, const Trace& t, double upstream,
              MlpGradient& grad) {
  const std::size_t layers = layer_count(model);
  std::vector<double> delta{upstream};
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const auto& prev = t.act[l];
    auto& gw = grad.weights[l];
    auto& gb = grad.biases[l];
    for (std::size_t r = 0; r < out; ++r) {
      gb[r] += delta[r];
      for (std::size_t c = 0; c < in; ++c) gw[r * in + c] += delta[r] * prev[c];
    }
    if (l == 0) break;
    std::vector<double> next(in, 0.0);
    const auto& w = model.weights[l];
    for (std::size_t c = 0; c < in; ++c) {
      if (t.pre[l - 1][c] <= 0.0) continue;  // ReLU gate
      double s = 0.0;
      for (std::size_t r = 0; r < out; ++r) s += w[r * in + c] * delta[r];
      next[c] = s;
    }
    delta = std::move(next);
  }
}

MlpGradient zero_gradient(const MlpModel& model) {
  MlpGradient g;
  for (std::size_t l = 0; l < layer_count(model); ++l) {
    g.weights.emplace_back(model.weights[l].size(), 0.0);
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  return g;
}

}  // namespace

MlpModel mlp_init(std::size_t inputs, const std::vector<std::size_t>& hidden,
                  std::uint64_t seed) {
  MlpModel model;
  model.layer_sizes.push_back(inputs);
  model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
  model.layer_sizes.push_back(1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(out, 0.0);
  }
  return model;
}

double mlp_predict(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  return forward(model, x).act.back()[0];
}

MlpGradient mlp_gradient(const MlpModel& model, std::span<const double> x,
                         double y) {
  check_input(model, x);
  const Trace t = forward(model, x);
  MlpGradient g = zero_gradient(model);
  backward(model, t, 2.0 * (t.act.back()[0] - y), g);
  return g;
}

double mlp_mse(const MlpModel& model, const Dataset& d,
               std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i : rows) {
    const double r = d.outcomes[i] - mlp_predict(model, d.row(i));
    s += r * r;
  }
  return s / static_cast<double>(rows.size());
}

MlpModel mlp_train_rows(const Dataset& d, std::span<const std::size_t> rows,
                        const TrainConfig& cfg) {
  if (rows.empty()) {
    throw Error(ErrorKind::EmptySegment, "no observations to train on");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("bad training configuration");
  }
  MlpModel model = mlp_init(d.p, cfg.hidden, cfg.seed);
  Rng rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(rows.begin(), rows.end());
  const std::size_t batch = std::min(cfg.batch_size, order.size());
  const bool full_batch = batch == order.size();
  if (full_batch) {
    // canonical accumulation order so the result ignores row order
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (d.outcomes[a] != d.outcomes[b]) return d.outcomes[a] < d.outcomes[b];
      if (d.treatments[a] != d.treatments[b]) return d.treatments[a] < d.treatments[b];
      auto xa = d.row(a);
      auto xb = d.row(b);
      return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
    });
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!full_batch) rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      MlpGradient g = zero_gradient(model);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const Trace t = forward(model, d.row(i));
        backward(model, t, 2.0 * (t.act.back()[0] - d.outcomes[i]), g);
      }
      const double scale = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < layer_count(model); ++l) {
        auto& w = model.weights[l];
        auto& b = model.biases[l];
        for (std::size_t k = 0; k < w.size(); ++k) {
          w[k] -= scale * g.weights[l][k] + cfg.learning_rate * 2.0 * cfg.l2 * w[k];
        }
        for (std::size_t k = 0; k < b.size(); ++k) {
          b[k] -= scale * g.biases[l][k] + cfg.learning_rate * 2.0 * cfg.l2 * b[k];
        }
      }
    }
  }
  return model;
}

std::vector<std::size_t> rows_in(const Dataset& d, const Interval& iv) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.n; ++i) {
    if (iv.contains(d.treatments[i])) rows.push_back(i);
  }
  return rows;
}

MlpModel mlp_train(const Dataset& d, const Interval& iv, const TrainConfig& cfg) {
  return mlp_train_rows(d, rows_in(d, iv), cfg);
}

double mlp_cost(const Dataset& d, const Interval& iv, const TrainConfig& cfg) {
  const auto rows = rows_in(d, iv);
  if (rows.empty()) return 0.0;
  const MlpModel model = mlp_train_rows(d, rows, cfg);
  return mlp_mse(model, d, rows) * static_cast<double>(rows.size()) /
         static_cast<double>(d.n);
}

double gradient_check(const MlpModel& model, std::span<const double> x,
                      double y, double eps) {
  const MlpGradient analytic = mlp_gradient(model, x, y);
  MlpModel probe = model;
  auto loss = [&](const MlpModel& mdl) {
    const double r = mlp_predict(mdl, x) - y;
    return r * r;
  };
  double worst = 0.0;
  auto compare = [&](double& param, double grad) {
    const double saved = param;
    param = saved + eps;
    const double up = loss(probe);
    param = saved - eps;
    const double down = loss(probe);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::size_t k = 0; k < probe.weights[l].size(); ++k) {
      compare(probe.weights[l][k], analytic.weights[l][k]);
    }
    for (std::size_t k = 0; k < probe.biases[l].size(); ++k) {
      compare(probe.biases[l][k], analytic.biases[l][k]);
    }
  }
  return worst;
}

}  // namespace jil
