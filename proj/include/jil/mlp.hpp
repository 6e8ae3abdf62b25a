#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jil/core.hpp"

namespace jil {

struct TrainConfig {
  std::vector<std::size_t> hidden{32, 32};
  int epochs = 500;
  double learning_rate = 1e-2;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double l2 = 0.0;  // penalty on every parameter, biases included
};

/// Glorot-uniform weights, zero biases.
MlpModel mlp_init(std::size_t inputs, const std::vector<std::size_t>& hidden,
                  std::uint64_t seed);

double mlp_predict(const MlpModel& model, std::span<const double> x);

/// Gradient of (predict(x) - y)^2 with respect to every parameter, laid out
/// like the model's weights and biases.
struct MlpGradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};
MlpGradient mlp_gradient(const MlpModel& model, std::span<const double> x,
                         double y);

/// Mean squared error over the given rows.
double mlp_mse(const MlpModel& model, const Dataset& d,
               std::span<const std::size_t> rows);

/// Mini-batch SGD on mean squared error (+ l2 ||params||^2) over `rows`.
MlpModel mlp_train_rows(const Dataset& d, std::span<const std::size_t> rows,
                        const TrainConfig& cfg);

/// Trains on the rows whose treatment falls in `iv`. Throws EmptySegment if
/// there are none.
MlpModel mlp_train(const Dataset& d, const Interval& iv, const TrainConfig& cfg);

/// (1/n) * residual sum of squares of a freshly trained network on `iv`;
/// 0 for an empty interval.
double mlp_cost(const Dataset& d, const Interval& iv, const TrainConfig& cfg);

/// Largest relative gap between the backprop gradient and central finite
/// differences over every parameter.
double gradient_check(const MlpModel& model, std::span<const double> x,
                      double y, double eps);

std::vector<std::size_t> rows_in(const Dataset& d, const Interval& iv);

}  // namespace jil
