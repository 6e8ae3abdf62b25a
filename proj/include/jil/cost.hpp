#pragma once

#include <cstddef>
#include <map>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "jil/core.hpp"
#include "jil/linalg.hpp"

namespace jil {

/// Sufficient statistics of the rows falling in one interval, with the
/// augmented design xbar = (1, x).
struct IntervalStats {
  linalg::Matrix gram;     // sum xbar xbar^T
  std::vector<double> xy;  // sum xbar y
  double syy = 0.0;        // sum y^2
  std::size_t count = 0;
};

/// Eigenfactor of an interval Gram matrix, U diag(tau) U^T.
struct GramFactor {
  linalg::Matrix u;
  std::vector<double> tau;  // eigenvalues, clamped at 0 below 1e-10 max
  std::vector<double> phi;  // U^T sum xbar y
  double syy = 0.0;
  std::size_t count = 0;
};

IntervalStats interval_stats(const Dataset& d, const Interval& iv);
GramFactor factorize(const IntervalStats& stats);

/// Ridge coefficients for shrinkage s = n * lambda * |I|. Null directions
/// with tau + s == 0 are dropped (minimum-norm solution).
std::vector<double> factor_theta(const GramFactor& f, double shrink);

/// Penalized per-interval cost
///   (1/n) sum_{A_i in I} (Y_i - xbar_i^T theta)^2 + lambda |I| ||theta||^2
/// evaluated from the eigenfactor.
double factor_cost(const GramFactor& f, std::size_t n, double lambda,
                   double length);

std::vector<double> ridge_fit(const Dataset& d, const Interval& iv,
                              double lambda);
double cost(const Dataset& d, const Interval& iv, double lambda);
std::vector<double> multi_lambda_costs(const Dataset& d, const Interval& iv,
                                       std::span<const double> lambdas);

/// Reference ridge solve over explicit rows without any eigendecomposition:
/// Gaussian elimination on (G + s I) theta = b, and for s == 0 with fewer rows
/// than coefficients the minimum-norm solution X^T (X X^T)^-1 y.
std::vector<double> ridge_fit_direct(const Dataset& d,
                                     std::span<const std::size_t> rows,
                                     double shrink);
/// cost() evaluated through ridge_fit_direct.
double cost_direct(const Dataset& d, const Interval& iv, double lambda);

/// Per-grid-cell statistics with prefix sums, so the statistics of any
/// grid interval are an O(p^2) difference.
class CellStats {
 public:
  CellStats(const Dataset& d, int m);

  IntervalStats interval(const Interval& iv) const;
  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  int m() const { return m_; }

 private:
  std::size_t n_;
  std::size_t dim_;
  int m_;
  // prefix arrays indexed by cell boundary 0..m
  std::vector<double> gram_;
  std::vector<double> xy_;
  std::vector<double> syy_;
  std::vector<std::size_t> count_;
};

/// Memoized GramFactor and per-lambda costs keyed by (lo, hi). Concurrent
/// readers share a lock; insertion takes it exclusively. Values are pure
/// functions of (data, interval, lambda grid), so a racing insert stores the
/// same bits either way.
class CostCache {
 public:
  struct Entry {
    GramFactor factor;
    std::vector<double> costs;  // aligned with the lambda grid
  };

  CostCache(const Dataset& d, int m, std::vector<double> lambdas);

  const Entry& entry(const Interval& iv) const;
  /// Cost for lambdas[h].
  double cost_at(const Interval& iv, std::size_t h) const;
  /// Cost for a lambda that must be a member of the grid.
  double get(const Interval& iv, double lambda) const;
  std::vector<double> theta(const Interval& iv, std::size_t h) const;

  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t lambda_index(double lambda) const;
  std::size_t size() const;
  std::size_t n() const { return cells_.n(); }

 private:
  Entry compute(const Interval& iv) const;

  CellStats cells_;
  std::vector<double> lambdas_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<int, int>, Entry> entries_;
};

/// Dense table of costs for every grid interval [lo, hi) and every lambda.
/// Filled either by the serial reference loop or the OpenMP kernel; both
/// produce identical bits.
class CostTable {
 public:
  CostTable(int m, std::size_t lambda_count);

  double at(int lo, int hi, std::size_t h) const {
    return values_[index(lo, hi) * lambda_count_ + h];
  }
  int m() const { return m_; }
  std::size_t lambda_count() const { return lambda_count_; }

  friend CostTable fill_cost_table_serial(const CellStats&,
                                          std::span<const double>);
  friend CostTable fill_cost_table_parallel(const CellStats&,
                                            std::span<const double>);

 private:
  std::size_t index(int lo, int hi) const {
    return static_cast<std::size_t>(lo) * static_cast<std::size_t>(m_ + 1) +
           static_cast<std::size_t>(hi);
  }

  int m_;
  std::size_t lambda_count_;
  std::vector<double> values_;
};

CostTable fill_cost_table_serial(const CellStats& cells,
                                 std::span<const double> lambdas);
CostTable fill_cost_table_parallel(const CellStats& cells,
                                   std::span<const double> lambdas);

}  // namespace jil
