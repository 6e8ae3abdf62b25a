#include <doctest.h>

#include <numbers>

#include "jil/cost.hpp"
#include "jil/mlp.hpp"
#include "oracles.hpp"

using namespace jil;

namespace {

MlpModel tiny(double a1, double b1, double a2, double b2) {
  MlpModel m;
  m.layer_sizes = {1, 1, 1};
  m.weights = {{a1}, {a2}};
  m.biases = {{b1}, {b2}};
  return m;
}

// Smallest |pre-activation| over the hidden units at x.
double closest_kink(const MlpModel& model, std::span<const double> x) {
  std::vector<double> act(x.begin(), x.end());
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < model.weights.size(); ++l) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    std::vector<double> next(out);
    for (std::size_t r = 0; r < out; ++r) {
      double z = model.biases[l][r];
      for (std::size_t c = 0; c < in; ++c) z += model.weights[l][r * in + c] * act[c];
      closest = std::min(closest, std::abs(z));
      next[r] = std::max(0.0, z);
    }
    act = std::move(next);
  }
  return closest;
}

MlpModel randomized(std::size_t p, const std::vector<std::size_t>& hidden, Rng& rng) {
  MlpModel m = mlp_init(p, hidden, rng.below(1u << 30));
  for (auto& b : m.biases) {
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
  }
  return m;
}

Dataset constant_target(std::size_t n, double value) {
  Dataset d = oracle::random_dataset(n, 2, 3);
  std::fill(d.outcomes.begin(), d.outcomes.end(), value);
  return d;
}

}  // namespace

TEST_CASE("forward pass hand evaluations") {
  MlpModel zero = mlp_init(3, {4}, 1);
  for (auto& w : zero.weights) std::fill(w.begin(), w.end(), 0.0);
  const std::vector<double> x{0.3, -2.0, 5.0};
  CHECK(mlp_predict(zero, x) == 0.0);

  const std::vector<double> two{2.0};
  CHECK(mlp_predict(tiny(1, -1, 1, 0), two) == 1.0);
  const std::vector<double> half{0.5};
  CHECK(mlp_predict(tiny(-2, 0, 1, 0.75), half) == 0.75);

  const std::vector<double> wrong{1.0, 2.0};
  try {
    mlp_predict(tiny(1, 0, 1, 0), wrong);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("Glorot init respects its bound and zero biases") {
  const MlpModel m = mlp_init(4, {8, 3}, 12);
  CHECK(m.layer_sizes == std::vector<std::size_t>{4, 8, 3, 1});
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.layer_sizes[l] + m.layer_sizes[l + 1]));
    for (double w : m.weights[l]) CHECK(std::abs(w) <= limit);
    for (double b : m.biases[l]) CHECK(b == 0.0);
  }
}

TEST_CASE("constant targets are learned through the bias") {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 4;
  const Interval all(0, 1, 1);

  Dataset flat;
  flat.p = 0;
  for (int i = 0; i < 100; ++i) {
    flat.treatments.push_back(i / 100.0);
    flat.outcomes.push_back(3.0);
  }
  flat.n = flat.outcomes.size();
  const MlpModel m0 = mlp_train(flat, all, cfg);
  for (std::size_t i = 0; i < flat.n; ++i) {
    CHECK(std::abs(mlp_predict(m0, flat.row(i)) - 3.0) < 0.1);
  }

  const Dataset d = constant_target(100, 3.0);
  const auto rows = oracle::rows_in(d, all);
  const MlpModel m = mlp_train_rows(d, rows, cfg);
  double mean = 0.0;
  for (std::size_t i : rows) mean += mlp_predict(m, d.row(i));
  mean /= static_cast<double>(rows.size());
  CHECK(std::abs(mean - 3.0) < 0.1);
  CHECK(mlp_cost(d, all, cfg) <= 1e-2);
}

TEST_CASE("no hidden layer reduces to ridge regression") {
  const Dataset d = oracle::random_dataset(100, 2, 21, 0.5);
  TrainConfig cfg;
  cfg.hidden = {};
  cfg.epochs = 4000;
  cfg.learning_rate = 0.2;
  cfg.batch_size = d.n;
  cfg.l2 = 0.01;
  const Interval all(0, 1, 1);
  const MlpModel m = mlp_train(d, all, cfg);
  const auto theta = ridge_fit(d, all, cfg.l2);
  CHECK(std::abs(m.biases[0][0] - theta[0]) < 1e-3);
  for (std::size_t j = 0; j < d.p; ++j) CHECK(std::abs(m.weights[0][j] - theta[j + 1]) < 1e-3);
}

TEST_CASE("training is deterministic given the seed") {
  const Dataset d = oracle::random_dataset(60, 2, 8);
  TrainConfig cfg;
  cfg.hidden = {8, 8};
  cfg.epochs = 30;
  cfg.seed = 99;
  const Interval iv(0, 1, 1);
  const MlpModel a = mlp_train(d, iv, cfg);
  const MlpModel b = mlp_train(d, iv, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
  cfg.seed = 100;
  CHECK(mlp_train(d, iv, cfg).weights != a.weights);
}

TEST_CASE("empty intervals") {
  const Dataset d = oracle::random_dataset(20, 1, 2);
  Dataset left = d;
  for (double& a : left.treatments) a *= 0.4;
  TrainConfig cfg;
  cfg.epochs = 5;
  CHECK(mlp_cost(left, Interval(3, 4, 4), cfg) == 0.0);
  try {
    mlp_train(left, Interval(3, 4, 4), cfg);
    FAIL("expected EmptySegment");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySegment);
  }
}

TEST_CASE("nonlinear segment is fit better by the network than by a line") {
  Rng rng(303);
  Dataset d;
  d.p = 2;
  for (int i = 0; i < 300; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.uniform(-1.0, 1.0);
    const double a = rng.uniform(0.25, 0.5);
    d.covariates.push_back(x1);
    d.covariates.push_back(x2);
    d.treatments.push_back(a);
    d.outcomes.push_back(std::sin(2.0 * std::numbers::pi * x2) + rng.normal());
  }
  d.n = d.outcomes.size();
  const Interval segment(1, 2, 4);
  TrainConfig cfg;
  cfg.seed = 5;
  CHECK(mlp_cost(d, segment, cfg) < cost(d, segment, 0.0));
}

TEST_CASE("backprop agrees with finite differences") {
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + rng.below(4);
    const std::vector<std::size_t> hidden{1 + rng.below(6), 1 + rng.below(6)};
    const MlpModel m = randomized(p, hidden, rng);
    std::vector<double> x(p);
    do {
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
    } while (closest_kink(m, x) < 1e-3);
    CHECK(gradient_check(m, x, rng.normal(), 1e-5) < 1e-4);
  }
}

TEST_CASE("zero network at y = 0 has zero gradient") {
  MlpModel m = mlp_init(3, {4, 4}, 1);
  for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
  const std::vector<double> x{0.2, 0.4, -0.1};
  const auto g = mlp_gradient(m, x, 0.0);
  for (const auto& layer : g.weights) {
    for (double v : layer) CHECK(v == 0.0);
  }
  CHECK(gradient_check(m, x, 0.0, 1e-5) == 0.0);
}

TEST_CASE("linear network gradient is 2 (yhat - y) xbar") {
  MlpModel m = mlp_init(3, {}, 7);
  m.biases[0][0] = 0.3;
  const std::vector<double> x{0.5, -1.0, 2.0};
  const double y = 0.7;
  const double yhat = mlp_predict(m, x);
  const auto g = mlp_gradient(m, x, y);
  CHECK(g.biases[0][0] == 2.0 * (yhat - y));
  for (std::size_t j = 0; j < 3; ++j) CHECK(g.weights[0][j] == 2.0 * (yhat - y) * x[j]);
}

TEST_CASE("full-batch training ignores row order") {
  const Dataset d = oracle::random_dataset(40, 2, 61);
  TrainConfig cfg;
  cfg.hidden = {6};
  cfg.epochs = 50;
  cfg.batch_size = d.n;
  std::vector<std::size_t> rows(d.n);
  std::iota(rows.begin(), rows.end(), 0);
  const MlpModel a = mlp_train_rows(d, rows, cfg);
  Rng rng(62);
  rng.shuffle(rows.begin(), rows.end());
  const MlpModel b = mlp_train_rows(d, rows, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
}

TEST_CASE("training does not increase the loss") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = oracle::random_dataset(80, 3, 70 + seed);
    TrainConfig cfg;
    cfg.hidden = {16, 16};
    cfg.epochs = 100;
    cfg.seed = seed;
    std::vector<std::size_t> rows(d.n);
    std::iota(rows.begin(), rows.end(), 0);
    const MlpModel init = mlp_init(d.p, cfg.hidden, cfg.seed);
    const MlpModel trained = mlp_train_rows(d, rows, cfg);
    CHECK(mlp_mse(trained, d, rows) <= mlp_mse(init, d, rows));
  }
}
