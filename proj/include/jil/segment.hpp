#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "jil/core.hpp"

namespace jil {

/// Cost of a grid interval. Must be non-negative and safe to call
/// reentrantly.
using CostFn = std::function<double(const Interval&)>;

struct Segmentation {
  Partition partition;
  /// sum_I cost(I) + gamma * |P|, summed left to right over the partition.
  double objective = 0.0;
  /// Number of cost evaluations requested by the solver.
  std::size_t evaluations = 0;
};

/// Bellman table of the last solve: value[r] = B(r) with B(0) = -gamma,
/// pred[r] the minimizing change point (smallest index on ties).
struct BellmanState {
  std::vector<double> value;
  std::vector<int> pred;
  std::vector<std::vector<int>> candidates;  // R_r for r = 0..m
};

/// Penalized DP with the candidate-set pruning rule
///   R_r = { j in R_{r-1} u {r-1} : B(j) + cost([j, r-1)) <= B(r-1) }.
/// With prune == false every j < r stays admissible.
Segmentation pelt(const CostFn& cost, int m, double gamma, bool prune = true,
                  BellmanState* state = nullptr);

/// Reference recursion without pruning.
Segmentation dp_no_prune(const CostFn& cost, int m, double gamma);

/// Exhaustive search over all 2^(m-1) boundary subsets (m <= 16). Ties go to
/// fewer intervals, then the lexicographically smallest boundary set.
Segmentation enumerate_partitions(const CostFn& cost, int m, double gamma);

/// sum_I cost(I) + gamma |P| in left-to-right order.
double partition_objective(const CostFn& cost, const Partition& partition,
                           double gamma);

}  // namespace jil
