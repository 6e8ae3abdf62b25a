#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jil/core.hpp"
#include "jil/mlp.hpp"

namespace jil {

struct TuningGrid {
  std::vector<double> lambdas;  // sorted, >= 0
  std::vector<double> gammas;   // sorted, > 0
  std::size_t k_folds = 5;
  std::uint64_t seed = 0;
};

struct CvReport {
  /// scores[h][j]: held-out squared error / n for (lambdas[h], gammas[j]).
  std::vector<std::vector<double>> scores;
  double best_lambda = 0.0;
  double best_gamma = 0.0;
  std::vector<std::size_t> fold_assignments;
};

/// Fold ids in [0, k) with sizes differing by at most one; a seeded uniform
/// shuffle of the balanced labels.
std::vector<std::size_t> kfold_split(std::size_t n, std::size_t k,
                                     std::uint64_t seed);

/// gamma = 4 log(n) / n.
double default_gamma(std::size_t n);

/// lambdas {0, 1e-3, 1e-2}; gammas default_gamma(n) * {1/4, 1/2, 1, 2, 4}.
TuningGrid default_grid(std::size_t n, std::uint64_t seed = 0);

/// Joint (lambda, gamma) selection for the linear method. One eigenfactor per
/// interval and fold serves the whole lambda grid; folds run in parallel.
CvReport cv_select_ljil(const Dataset& d, int m, const TuningGrid& grid);
/// Same, with caller-supplied fold ids in [0, grid.k_folds); grid.seed is
/// ignored.
CvReport cv_select_ljil(const Dataset& d, int m, const TuningGrid& grid,
                        std::vector<std::size_t> fold_assignments);

/// Serial reference: refits every (lambda, gamma, fold) from scratch with
/// direct ridge solves and the unpruned recursion.
CvReport cv_select_ljil_naive(const Dataset& d, int m, const TuningGrid& grid);

struct DeepCvReport {
  std::vector<double> scores;  // aligned with gammas
  double best_gamma = 0.0;
};

/// Gamma selection for the deep method (lambda = 0). Network fits are shared
/// across the gamma grid within a fold.
DeepCvReport cv_select_djil(const Dataset& d, int m,
                            std::span<const double> gammas, std::size_t k,
                            const TrainConfig& cfg, std::uint64_t seed);

}  // namespace jil
