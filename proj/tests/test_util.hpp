#pragma once

#include "zacgm/core.hpp"
#include "zacgm/lap.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace zac::testing {

inline Matrix random_symmetric(Index n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix M = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) M(i, j) = M(j, i) = u(rng);
  return M;
}

/// Random valid problem with m <= n and the given weights.
inline MatchProblem random_problem(Index m, Index n, std::uint64_t seed, Weights w = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix D(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index a = 0; a < n; ++a) D(i, a) = u(rng);
  Matrix adjA = random_symmetric(m, rng, 0.1, 1.0);
  Matrix adjB = random_symmetric(n, rng, 0.1, 1.0);
  Matrix attrA = random_symmetric(m, rng, 0.0, 1.0);
  Matrix attrB = random_symmetric(n, rng, 0.0, 1.0);
  return make_problem(D, adjA, adjB, attrA, attrB, w);
}

/// Random point in the relaxed polytope: a convex mix of partial permutations.
inline Matrix random_substochastic(Index m, Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix P = Matrix::Zero(m, n);
  double left = 1.0;
  for (int layer = 0; layer < 4; ++layer) {
    const double w = layer == 3 ? left : left * u(rng);
    left -= w;
    std::vector<Index> cols(static_cast<std::size_t>(n));
    for (Index a = 0; a < n; ++a) cols[static_cast<std::size_t>(a)] = a;
    std::shuffle(cols.begin(), cols.end(), rng);
    for (Index i = 0; i < m; ++i)
      if (u(rng) < 0.8) P(i, cols[static_cast<std::size_t>(i)]) += w;
  }
  return P;
}

/// Calls `visit` for every partial assignment of exactly k pairs (k < 0: any size).
inline void for_each_assignment(Index m, Index n, Index k,
                                const std::function<void(const std::vector<std::pair<Index, Index>>&)>& visit) {
  std::vector<std::pair<Index, Index>> cur;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::function<void(Index)> rec = [&](Index i) {
    if (i == m) {
      if (k < 0 || static_cast<Index>(cur.size()) == k) visit(cur);
      return;
    }
    if (k >= 0 && static_cast<Index>(cur.size()) + (m - i) < k) return;
    rec(i + 1);
    if (k >= 0 && static_cast<Index>(cur.size()) == k) return;
    for (Index a = 0; a < n; ++a) {
      if (used[static_cast<std::size_t>(a)]) continue;
      used[static_cast<std::size_t>(a)] = 1;
      cur.emplace_back(i, a);
      rec(i + 1);
      cur.pop_back();
      used[static_cast<std::size_t>(a)] = 0;
    }
  };
  rec(0);
}

/// Minimum of sum(cost) over assignments of size k (k < 0: any size, empty allowed).
inline double brute_force_min(const Matrix& cost, Index k) {
  double best = std::numeric_limits<double>::infinity();
  for_each_assignment(cost.rows(), cost.cols(), k, [&](const auto& pairs) {
    best = std::min(best, assignment_cost(cost, pairs));
  });
  return best;
}

inline Matrix to_matrix(Index m, Index n, const std::vector<std::pair<Index, Index>>& pairs) {
  Matrix P = Matrix::Zero(m, n);
  for (const auto& [i, a] : pairs) P(i, a) = 1.0;
  return P;
}

inline bool is_partial_permutation(const std::vector<std::pair<Index, Index>>& pairs, Index m,
                                   Index n) {
  std::vector<char> r(static_cast<std::size_t>(m), 0), c(static_cast<std::size_t>(n), 0);
  for (const auto& [i, a] : pairs) {
    if (i < 0 || i >= m || a < 0 || a >= n) return false;
    if (r[static_cast<std::size_t>(i)]++ || c[static_cast<std::size_t>(a)]++) return false;
  }
  return true;
}

}  // namespace zac::testing
