#pragma once

#include "zacgm/core.hpp"

#include <utility>
#include <vector>

namespace zac {

/// A set of (row, col) pairs with distinct rows and distinct columns,
/// sorted by row, plus the summed cost of those entries.
struct Assignment {
  std::vector<std::pair<Index, Index>> pairs;
  double totalCost = 0.0;

  Index size() const { return static_cast<Index>(pairs.size()); }
};

/// Minimum-cost assignment of every row of an m x n cost matrix (m <= n).
/// Shortest augmenting paths with dual potentials, O(m n^2). Ties are
/// resolved by scan order, so results are deterministic.
Assignment solve_lap(const Matrix& cost);

/// Minimum-cost assignment with exactly k pairs, 1 <= k <= min(m, n).
///
/// Successive shortest paths started from every free row at once and
/// stopped after k augmentations, O(k n max(m, n)). Each intermediate
/// matching is optimal for its own cardinality, so no padded square
/// problem is built.
Assignment solve_klap(const Matrix& cost, Index k);

/// Minimum of sum(cost .* P) over the doubly-substochastic polytope. The
/// polytope is integral, so the optimum is a partial permutation; only
/// strictly negative entries are ever selected.
Assignment solve_substochastic(const Matrix& cost);

/// Total of cost over the given pairs.
double assignment_cost(const Matrix& cost, const std::vector<std::pair<Index, Index>>& pairs);

}  // namespace zac
