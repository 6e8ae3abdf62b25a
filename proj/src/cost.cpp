#include "jil/cost.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "jil/parallel.hpp"

namespace jil {

namespace {

constexpr double kClampRatio = 1e-10;

void accumulate_row(IntervalStats& s, std::span<const double> x, double y) {
  const std::size_t dim = x.size() + 1;
  auto xbar = [&](std::size_t j) { return j == 0 ? 1.0 : x[j - 1]; };
  for (std::size_t r = 0; r < dim; ++r) {
    const double xr = xbar(r);
    for (std::size_t c = 0; c < dim; ++c) s.gram(r, c) += xr * xbar(c);
    s.xy[r] += xr * y;
  }
  s.syy += y * y;
  s.count += 1;
}

}  // namespace

IntervalStats interval_stats(const Dataset& d, const Interval& iv) {
  const std::size_t dim = d.p + 1;
  IntervalStats s{linalg::Matrix(dim, dim), std::vector<double>(dim), 0.0, 0};
  for (std::size_t i = 0; i < d.n; ++i) {
    if (iv.contains(d.treatments[i])) accumulate_row(s, d.row(i), d.outcomes[i]);
  }
  return s;
}

GramFactor factorize(const IntervalStats& stats) {
  const std::size_t dim = stats.xy.size();
  GramFactor f;
  f.syy = stats.syy;
  f.count = stats.count;
  if (stats.count == 0) {
    f.u = linalg::Matrix::identity(dim);
    f.tau.assign(dim, 0.0);
    f.phi.assign(dim, 0.0);
    return f;
  }
  auto eig = linalg::jacobi_eigen(stats.gram);
  f.u = std::move(eig.vectors);
  f.tau = std::move(eig.values);
  const double top = *std::max_element(f.tau.begin(), f.tau.end());
  for (double& t : f.tau) {
    if (t < kClampRatio * top) t = 0.0;
  }
  f.phi.assign(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    double s = 0.0;
    for (std::size_t r = 0; r < dim; ++r) s += f.u(r, k) * stats.xy[r];
    f.phi[k] = s;
  }
  return f;
}

std::vector<double> factor_theta(const GramFactor& f, double shrink) {
  const std::size_t dim = f.phi.size();
  std::vector<double> coef(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    const double denom = f.tau[k] + shrink;
    if (denom > 0.0) coef[k] = f.phi[k] / denom;
  }
  std::vector<double> theta(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += f.u(r, k) * coef[k];
    theta[r] = s;
  }
  return theta;
}

double factor_cost(const GramFactor& f, std::size_t n, double lambda,
                   double length) {
  if (f.count == 0) return 0.0;
  const double shrink = static_cast<double>(n) * lambda * length;
  // n * fit = syy - 2 phi^T D phi + phi^T diag(tau D^2) phi, D = (tau + s)^-1
  double cross = 0.0;
  double quad = 0.0;
  double norm2 = 0.0;
  for (std::size_t k = 0; k < f.phi.size(); ++k) {
    const double denom = f.tau[k] + shrink;
    if (!(denom > 0.0)) continue;
    const double phi2 = f.phi[k] * f.phi[k];
    cross += phi2 / denom;
    quad += f.tau[k] * phi2 / (denom * denom);
    norm2 += phi2 / (denom * denom);
  }
  const double fit = std::max(0.0, f.syy - 2.0 * cross + quad);
  return fit / static_cast<double>(n) + lambda * length * norm2;
}

std::vector<double> ridge_fit(const Dataset& d, const Interval& iv,
                              double lambda) {
  const auto f = factorize(interval_stats(d, iv));
  return factor_theta(f, static_cast<double>(d.n) * lambda * iv.length());
}

double cost(const Dataset& d, const Interval& iv, double lambda) {
  const auto f = factorize(interval_stats(d, iv));
  return factor_cost(f, d.n, lambda, iv.length());
}

std::vector<double> multi_lambda_costs(const Dataset& d, const Interval& iv,
                                       std::span<const double> lambdas) {
  const auto f = factorize(interval_stats(d, iv));
  std::vector<double> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    out.push_back(factor_cost(f, d.n, lambda, iv.length()));
  }
  return out;
}

std::vector<double> ridge_fit_direct(const Dataset& d,
                                     std::span<const std::size_t> rows,
                                     double shrink) {
  const std::size_t dim = d.p + 1;
  if (rows.empty()) return std::vector<double>(dim, 0.0);
  auto xbar = [&](std::size_t i, std::size_t j) {
    return j == 0 ? 1.0 : d.row(i)[j - 1];
  };
  if (shrink == 0.0 && rows.size() < dim) {
    // underdetermined: theta = X^T (X X^T)^-1 y
    const std::size_t k = rows.size();
    linalg::Matrix outer(k, k);
    std::vector<double> y(k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += xbar(rows[a], j) * xbar(rows[b], j);
        outer(a, b) = s;
      }
      y[a] = d.outcomes[rows[a]];
    }
    const auto w = linalg::solve(outer, y);
    std::vector<double> theta(dim, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t j = 0; j < dim; ++j) theta[j] += xbar(rows[a], j) * w[a];
    }
    return theta;
  }
  linalg::Matrix gram(dim, dim);
  std::vector<double> rhs(dim, 0.0);
  for (std::size_t i : rows) {
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) gram(r, c) += xbar(i, r) * xbar(i, c);
      rhs[r] += xbar(i, r) * d.outcomes[i];
    }
  }
  for (std::size_t r = 0; r < dim; ++r) gram(r, r) += shrink;
  return linalg::solve(gram, rhs);
}

double cost_direct(const Dataset& d, const Interval& iv, double lambda) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.n; ++i) {
    if (iv.contains(d.treatments[i])) rows.push_back(i);
  }
  if (rows.empty()) return 0.0;
  const auto theta = ridge_fit_direct(
      d, rows, static_cast<double>(d.n) * lambda * iv.length());
  double sse = 0.0;
  for (std::size_t i : rows) {
    double q = theta[0];
    for (std::size_t j = 0; j < d.p; ++j) q += theta[j + 1] * d.row(i)[j];
    sse += (d.outcomes[i] - q) * (d.outcomes[i] - q);
  }
  double norm2 = 0.0;
  for (double t : theta) norm2 += t * t;
  return sse / static_cast<double>(d.n) + lambda * iv.length() * norm2;
}

CellStats::CellStats(const Dataset& d, int m)
    : n_(d.n), dim_(d.p + 1), m_(m) {
  const std::size_t cells = static_cast<std::size_t>(m) + 1;
  const std::size_t g = dim_ * dim_;
  gram_.assign(cells * g, 0.0);
  xy_.assign(cells * dim_, 0.0);
  syy_.assign(cells, 0.0);
  count_.assign(cells, 0);

  // per-cell sums land in slot cell + 1, then prefix in place
  for (std::size_t i = 0; i < d.n; ++i) {
    const std::size_t slot = static_cast<std::size_t>(grid_cell(d.treatments[i], m)) + 1;
    auto x = d.row(i);
    const double y = d.outcomes[i];
    double* gram = gram_.data() + slot * g;
    double* xy = xy_.data() + slot * dim_;
    for (std::size_t r = 0; r < dim_; ++r) {
      const double xr = r == 0 ? 1.0 : x[r - 1];
      for (std::size_t c = 0; c < dim_; ++c) {
        gram[r * dim_ + c] += xr * (c == 0 ? 1.0 : x[c - 1]);
      }
      xy[r] += xr * y;
    }
    syy_[slot] += y * y;
    count_[slot] += 1;
  }
  for (std::size_t c = 1; c < cells; ++c) {
    for (std::size_t k = 0; k < g; ++k) gram_[c * g + k] += gram_[(c - 1) * g + k];
    for (std::size_t k = 0; k < dim_; ++k) xy_[c * dim_ + k] += xy_[(c - 1) * dim_ + k];
    syy_[c] += syy_[c - 1];
    count_[c] += count_[c - 1];
  }
}

IntervalStats CellStats::interval(const Interval& iv) const {
  const std::size_t g = dim_ * dim_;
  const auto lo = static_cast<std::size_t>(iv.lo);
  const auto hi = static_cast<std::size_t>(iv.hi);
  IntervalStats s{linalg::Matrix(dim_, dim_), std::vector<double>(dim_), 0.0, 0};
  s.count = count_[hi] - count_[lo];
  if (s.count == 0) return s;
  auto gram = s.gram.data();
  for (std::size_t k = 0; k < g; ++k) gram[k] = gram_[hi * g + k] - gram_[lo * g + k];
  // symmetrize away subtraction noise
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = r + 1; c < dim_; ++c) {
      const double v = 0.5 * (s.gram(r, c) + s.gram(c, r));
      s.gram(r, c) = v;
      s.gram(c, r) = v;
    }
  }
  for (std::size_t k = 0; k < dim_; ++k) s.xy[k] = xy_[hi * dim_ + k] - xy_[lo * dim_ + k];
  s.syy = std::max(0.0, syy_[hi] - syy_[lo]);
  return s;
}

CostCache::CostCache(const Dataset& d, int m, std::vector<double> lambdas)
    : cells_(d, m), lambdas_(std::move(lambdas)) {}

CostCache::Entry CostCache::compute(const Interval& iv) const {
  Entry e{factorize(cells_.interval(iv)), {}};
  e.costs.reserve(lambdas_.size());
  for (double lambda : lambdas_) {
    e.costs.push_back(factor_cost(e.factor, cells_.n(), lambda, iv.length()));
  }
  return e;
}

const CostCache::Entry& CostCache::entry(const Interval& iv) const {
  const auto key = std::make_pair(iv.lo, iv.hi);
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  Entry fresh = compute(iv);
  std::unique_lock lock(mutex_);
  return entries_.try_emplace(key, std::move(fresh)).first->second;
}

double CostCache::cost_at(const Interval& iv, std::size_t h) const {
  return entry(iv).costs.at(h);
}

double CostCache::get(const Interval& iv, double lambda) const {
  return cost_at(iv, lambda_index(lambda));
}

std::vector<double> CostCache::theta(const Interval& iv, std::size_t h) const {
  const double shrink =
      static_cast<double>(cells_.n()) * lambdas_.at(h) * iv.length();
  return factor_theta(entry(iv).factor, shrink);
}

std::size_t CostCache::lambda_index(double lambda) const {
  auto it = std::find(lambdas_.begin(), lambdas_.end(), lambda);
  if (it == lambdas_.end()) {
    throw std::invalid_argument("lambda is not on the cache grid");
  }
  return static_cast<std::size_t>(it - lambdas_.begin());
}

std::size_t CostCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

CostTable::CostTable(int m, std::size_t lambda_count)
    : m_(m),
      lambda_count_(lambda_count),
      values_(static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(m + 1) *
                  lambda_count,
              0.0) {}

namespace {

void fill_row(std::vector<double>& values, std::size_t stride_lo,
              const CellStats& cells, std::span<const double> lambdas, int lo) {
  const int m = cells.m();
  for (int hi = lo + 1; hi <= m; ++hi) {
    const Interval iv(lo, hi, m);
    const auto f = factorize(cells.interval(iv));
    const std::size_t base =
        (static_cast<std::size_t>(lo) * stride_lo + static_cast<std::size_t>(hi)) *
        lambdas.size();
    for (std::size_t h = 0; h < lambdas.size(); ++h) {
      values[base + h] = factor_cost(f, cells.n(), lambdas[h], iv.length());
    }
  }
}

}  // namespace

CostTable fill_cost_table_serial(const CellStats& cells,
                                 std::span<const double> lambdas) {
  CostTable table(cells.m(), lambdas.size());
  const std::size_t stride = static_cast<std::size_t>(cells.m()) + 1;
  for (int lo = 0; lo < cells.m(); ++lo) {
    fill_row(table.values_, stride, cells, lambdas, lo);
  }
  return table;
}

CostTable fill_cost_table_parallel(const CellStats& cells,
                                   std::span<const double> lambdas) {
  CostTable table(cells.m(), lambdas.size());
  const std::size_t stride = static_cast<std::size_t>(cells.m()) + 1;
  const int m = cells.m();
  // rows shrink with lo; dynamic scheduling balances the triangle
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (int lo = 0; lo < m; ++lo) {
    fill_row(table.values_, stride, cells, lambdas, lo);
  }
  return table;
}

}  // namespace jil
