#include "jil/segment.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace jil {

namespace {

void check_inputs(int m, double gamma) {
  if (!std::isfinite(gamma) || gamma < 0.0) {
    std::ostringstream os;
    os << "jump penalty must be finite and non-negative, got " << gamma;
    throw Error(ErrorKind::InvalidPenalty, os.str());
  }
  if (m < 1) throw std::invalid_argument("grid size must be >= 1");
}

Partition backtrack(const std::vector<int>& pred, int m) {
  std::vector<int> bounds;
  for (int r = pred[m]; r > 0; r = pred[r]) bounds.push_back(r);
  std::vector<int> interior(bounds.rbegin(), bounds.rend());
  return Partition::from_boundaries(m, interior);
}

}  // namespace

double partition_objective(const CostFn& cost, const Partition& partition,
                           double gamma) {
  double total = 0.0;
  for (const auto& iv : partition.intervals()) total += cost(iv);
  return total + gamma * static_cast<double>(partition.size());
}

Segmentation pelt(const CostFn& cost, int m, double gamma, bool prune,
                  BellmanState* state) {
  check_inputs(m, gamma);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> bellman(m + 1, inf);
  std::vector<int> pred(m + 1, 0);
  bellman[0] = -gamma;

  std::size_t evaluations = 0;
  // cost of [j, r) for the current r, kept to apply the pruning rule at r + 1
  std::vector<double> last_cost(m + 1, 0.0);
  std::vector<int> candidates{0};
  std::vector<std::vector<int>> history;
  if (state) history.push_back(candidates);

  for (int r = 1; r <= m; ++r) {
    if (r > 1) {
      // R_r from R_{r-1} u {r-1}; the costs [j, r-1) were computed at r - 1.
      std::vector<int> next;
      next.reserve(candidates.size() + 1);
      for (int j : candidates) {
        if (!prune || bellman[j] + last_cost[j] <= bellman[r - 1]) next.push_back(j);
      }
      next.push_back(r - 1);
      candidates = std::move(next);
    }

    double best = inf;
    int best_j = candidates.front();
    for (int j : candidates) {
      const double c = cost(Interval(j, r, m));
      ++evaluations;
      last_cost[j] = c;
      const double v = bellman[j] + gamma + c;
      if (v < best) {
        best = v;
        best_j = j;
      }
    }
    bellman[r] = best;
    pred[r] = best_j;
    if (state) history.push_back(candidates);
  }

  Segmentation out{backtrack(pred, m), 0.0, evaluations};
  out.objective = partition_objective(cost, out.partition, gamma);
  if (state) {
    state->value = std::move(bellman);
    state->pred = std::move(pred);
    state->candidates = std::move(history);
  }
  return out;
}

Segmentation dp_no_prune(const CostFn& cost, int m, double gamma) {
  check_inputs(m, gamma);
  std::vector<double> bellman(m + 1, 0.0);
  std::vector<int> pred(m + 1, 0);
  bellman[0] = -gamma;
  std::size_t evaluations = 0;
  for (int r = 1; r <= m; ++r) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (int j = 0; j < r; ++j) {
      const double v = bellman[j] + gamma + cost(Interval(j, r, m));
      ++evaluations;
      if (v < best) {
        best = v;
        best_j = j;
      }
    }
    bellman[r] = best;
    pred[r] = best_j;
  }
  Segmentation out{backtrack(pred, m), 0.0, evaluations};
  out.objective = partition_objective(cost, out.partition, gamma);
  return out;
}

Segmentation enumerate_partitions(const CostFn& cost, int m, double gamma) {
  check_inputs(m, gamma);
  if (m > 16) {
    throw Error(ErrorKind::GridTooLarge, "enumeration is limited to m <= 16");
  }
  const std::uint32_t subsets = 1u << (m - 1);
  std::size_t evaluations = 0;

  bool have_best = false;
  Segmentation best;
  std::vector<int> best_bounds;
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    // bit b set means an interior boundary at grid index b + 1
    std::vector<int> bounds;
    for (int b = 0; b < m - 1; ++b) {
      if (mask & (1u << b)) bounds.push_back(b + 1);
    }
    Partition part = Partition::from_boundaries(m, bounds);
    const double value = partition_objective(cost, part, gamma);
    evaluations += part.size();

    bool take = !have_best || value < best.objective;
    if (have_best && value == best.objective) {
      if (bounds.size() != best_bounds.size()) {
        take = bounds.size() < best_bounds.size();
      } else {
        take = bounds < best_bounds;
      }
    }
    if (take) {
      have_best = true;
      best.partition = std::move(part);
      best.objective = value;
      best_bounds = std::move(bounds);
    }
  }
  best.evaluations = evaluations;
  return best;
}

}  // namespace jil
