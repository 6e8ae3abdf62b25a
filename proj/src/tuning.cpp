#include "jil/tuning.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "jil/cost.hpp"
#include "jil/fit.hpp"
#include "jil/parallel.hpp"
#include "jil/random.hpp"
#include "jil/segment.hpp"

namespace jil {

namespace {

void check_grid(const Dataset& d, const TuningGrid& grid) {
  if (grid.lambdas.empty() || grid.gammas.empty()) {
    throw std::invalid_argument("tuning grids must be non-empty");
  }
  for (double l : grid.lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw Error(ErrorKind::InvalidPenalty, "ridge grid values must be >= 0");
    }
  }
  for (double g : grid.gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw Error(ErrorKind::InvalidPenalty, "jump grid values must be >= 0");
    }
  }
  if (grid.k_folds < 2 || grid.k_folds > d.n) {
    throw Error(ErrorKind::BadFoldCount, "need 2 <= folds <= n");
  }
}

struct FoldRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held;
};

std::vector<FoldRows> split_rows(const std::vector<std::size_t>& folds,
                                 std::size_t k) {
  std::vector<FoldRows> out(k);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (folds[i] == f ? out[f].held : out[f].train).push_back(i);
    }
  }
  return out;
}

double linear_prediction(std::span<const double> theta, std::span<const double> x) {
  double q = theta[0];
  for (std::size_t j = 0; j < x.size(); ++j) q += theta[j + 1] * x[j];
  return q;
}

// Sums per-row contributions in row order so the score does not depend on
// how rows were grouped into folds.
double row_ordered_total(const std::vector<double>& per_row, std::size_t n) {
  double total = 0.0;
  for (double v : per_row) total += v;
  return total / static_cast<double>(n);
}

void pick_best(CvReport& report, const TuningGrid& grid) {
  double best = std::numeric_limits<double>::infinity();
  // larger lambda first, then larger gamma: the first strict minimum wins
  for (std::size_t h = grid.lambdas.size(); h-- > 0;) {
    for (std::size_t j = grid.gammas.size(); j-- > 0;) {
      if (report.scores[h][j] < best) {
        best = report.scores[h][j];
        report.best_lambda = grid.lambdas[h];
        report.best_gamma = grid.gammas[j];
      }
    }
  }
}

}  // namespace

std::vector<std::size_t> kfold_split(std::size_t n, std::size_t k,
                                     std::uint64_t seed) {
  if (k < 2 || k > n) {
    std::ostringstream os;
    os << "fold count " << k << " must lie in [2, " << n << "]";
    throw Error(ErrorKind::BadFoldCount, os.str());
  }
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i % k;
  Rng rng(mix_seed(seed, 0x6b666f6c64ULL));
  rng.shuffle(ids.begin(), ids.end());
  return ids;
}

double default_gamma(std::size_t n) {
  if (n < 2) throw std::invalid_argument("default_gamma needs n >= 2");
  return 4.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
}

TuningGrid default_grid(std::size_t n, std::uint64_t seed) {
  const double g = default_gamma(n);
  return TuningGrid{{0.0, 1e-3, 1e-2},
                    {0.25 * g, 0.5 * g, g, 2.0 * g, 4.0 * g},
                    5,
                    seed};
}

CvReport cv_select_ljil(const Dataset& d, int m, const TuningGrid& grid) {
  validate_dataset(d);
  check_grid(d, grid);
  return cv_select_ljil(d, m, grid, kfold_split(d.n, grid.k_folds, grid.seed));
}

CvReport cv_select_ljil(const Dataset& d, int m, const TuningGrid& grid,
                        std::vector<std::size_t> fold_assignments) {
  validate_dataset(d);
  check_grid(d, grid);
  const std::size_t H = grid.lambdas.size();
  const std::size_t J = grid.gammas.size();
  const std::size_t K = grid.k_folds;
  if (fold_assignments.size() != d.n) {
    throw std::invalid_argument("one fold id per row is required");
  }
  for (std::size_t f : fold_assignments) {
    if (f >= K) throw Error(ErrorKind::BadFoldCount, "fold id out of range");
  }

  CvReport report;
  report.fold_assignments = std::move(fold_assignments);
  const auto folds = split_rows(report.fold_assignments, K);

  // held-out squared residual per (h, j, row); folds own disjoint rows
  std::vector<double> residual(H * J * d.n, 0.0);

#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (std::size_t f = 0; f < K; ++f) {
    const Dataset train = d.subset(folds[f].train);
    const CellStats cells(train, m);
    const CostTable table = fill_cost_table_serial(cells, grid.lambdas);
    for (std::size_t h = 0; h < H; ++h) {
      const CostFn costfn = [&](const Interval& iv) {
        return table.at(iv.lo, iv.hi, h);
      };
      for (std::size_t j = 0; j < J; ++j) {
        const Segmentation seg = pelt(costfn, m, grid.gammas[j]);
        std::vector<std::vector<double>> thetas;
        for (const auto& iv : seg.partition.intervals()) {
          const auto factor = factorize(cells.interval(iv));
          thetas.push_back(factor_theta(
              factor, static_cast<double>(train.n) * grid.lambdas[h] * iv.length()));
        }
        for (std::size_t i : folds[f].held) {
          const std::size_t s = seg.partition.locate(d.treatments[i]);
          const double r = d.outcomes[i] - linear_prediction(thetas[s], d.row(i));
          residual[(h * J + j) * d.n + i] = r * r;
        }
      }
    }
  }

  report.scores.assign(H, std::vector<double>(J, 0.0));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t j = 0; j < J; ++j) {
      const auto first = residual.begin() + static_cast<std::ptrdiff_t>((h * J + j) * d.n);
      report.scores[h][j] =
          row_ordered_total(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(d.n)), d.n);
    }
  }
  pick_best(report, grid);
  return report;
}

CvReport cv_select_ljil_naive(const Dataset& d, int m, const TuningGrid& grid) {
  validate_dataset(d);
  check_grid(d, grid);
  const std::size_t H = grid.lambdas.size();
  const std::size_t J = grid.gammas.size();
  const std::size_t K = grid.k_folds;

  CvReport report;
  report.fold_assignments = kfold_split(d.n, K, grid.seed);
  const auto folds = split_rows(report.fold_assignments, K);
  report.scores.assign(H, std::vector<double>(J, 0.0));

  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> per_row(d.n, 0.0);
      for (std::size_t f = 0; f < K; ++f) {
        const Dataset train = d.subset(folds[f].train);
        const double lambda = grid.lambdas[h];
        const CostFn costfn = [&](const Interval& iv) {
          return cost_direct(train, iv, lambda);
        };
        const Segmentation seg = dp_no_prune(costfn, m, grid.gammas[j]);
        std::vector<std::vector<double>> thetas;
        for (const auto& iv : seg.partition.intervals()) {
          thetas.push_back(ridge_fit_direct(
              train, rows_in(train, iv),
              static_cast<double>(train.n) * lambda * iv.length()));
        }
        for (std::size_t i : folds[f].held) {
          const std::size_t s = seg.partition.locate(d.treatments[i]);
          const double r = d.outcomes[i] - linear_prediction(thetas[s], d.row(i));
          per_row[i] = r * r;
        }
      }
      report.scores[h][j] = row_ordered_total(per_row, d.n);
    }
  }
  pick_best(report, grid);
  return report;
}

DeepCvReport cv_select_djil(const Dataset& d, int m,
                            std::span<const double> gammas, std::size_t k,
                            const TrainConfig& cfg, std::uint64_t seed) {
  validate_dataset(d);
  if (gammas.empty()) throw std::invalid_argument("gamma grid is empty");
  const auto assignment = kfold_split(d.n, k, seed);
  const auto folds = split_rows(assignment, k);
  const std::size_t J = gammas.size();
  std::vector<double> residual(J * d.n, 0.0);

  for (std::size_t f = 0; f < k; ++f) {
    const Dataset train = d.subset(folds[f].train);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, f);
    const DeepCostCache cache(train, m, fold_cfg);
    for (std::size_t j = 0; j < J; ++j) {
      const JilFit fit = fit_djil(cache, m, gammas[j]);
      for (std::size_t i : folds[f].held) {
        const std::size_t s = fit.partition.locate(d.treatments[i]);
        const double r = d.outcomes[i] - predict(fit.models[s], d.row(i));
        residual[j * d.n + i] = r * r;
      }
    }
  }

  DeepCvReport report;
  report.scores.resize(J);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) total += residual[j * d.n + i];
    report.scores[j] = total / static_cast<double>(d.n);
  }
  for (std::size_t j = J; j-- > 0;) {
    if (report.scores[j] < best) {
      best = report.scores[j];
      report.best_gamma = gammas[j];
    }
  }
  return report;
}

}  // namespace jil
