#include "zacgm/lap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zac {

namespace {

void require_finite(const Matrix& cost, const char* who) {
  if (!cost.allFinite()) throw NumericalError(std::string(who) + ": cost has non-finite entries");
}

// Successive shortest paths on the bipartite graph source -> rows -> cols ->
// sink, stopping after `k` augmentations (rows <= cols, k <= rows). Every
// phase starts a Dijkstra search from all free rows at once, so each
// intermediate matching is a minimum-cost matching of its cardinality.
// Costs are shifted to be nonnegative, which makes zero potentials feasible
// and leaves the optimal k-pair set unchanged. Returns colOfRow (-1 if free).
std::vector<Index> shortest_paths(const Matrix& cost, Index k) {
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  const double shift = cost.size() ? cost.minCoeff() : 0.0;
  std::vector<double> c(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      c[i * cols + j] = cost(static_cast<Index>(i), static_cast<Index>(j)) - shift;

  // Reduced cost of row i -> col j is c_ij + p_i - q_j >= 0, tight on matched pairs.
  std::vector<double> p(rows, 0.0), q(cols, 0.0);
  std::vector<Index> colOfRow(rows, -1), rowOfCol(cols, -1);
  std::vector<double> dist(cols);
  std::vector<Index> way(cols);
  std::vector<char> done(cols);

  for (Index phase = 0; phase < k; ++phase) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < rows; ++i) {
      if (colOfRow[i] >= 0) continue;
      const double* ci = &c[i * cols];
      for (std::size_t j = 0; j < cols; ++j) {
        const double r = ci[j] + p[i] - q[j];
        if (r < dist[j]) {
          dist[j] = r;
          way[j] = static_cast<Index>(i);
        }
      }
    }
    std::size_t jEnd = cols;
    for (;;) {
      std::size_t j1 = cols;
      double best = inf;
      for (std::size_t j = 0; j < cols; ++j)
        if (!done[j] && dist[j] < best) {
          best = dist[j];
          j1 = j;
        }
      if (j1 == cols) throw NumericalError("assignment: no augmenting path");
      done[j1] = 1;
      if (rowOfCol[j1] < 0) {
        jEnd = j1;
        break;
      }
      const auto i1 = static_cast<std::size_t>(rowOfCol[j1]);
      const double* ci = &c[i1 * cols];
      const double base = best + p[i1];
      for (std::size_t j = 0; j < cols; ++j) {
        if (done[j]) continue;
        const double r = base + ci[j] - q[j];
        if (r < dist[j]) {
          dist[j] = r;
          way[j] = static_cast<Index>(i1);
        }
      }
    }

    // Potential update pi += min(dist, dist_sink); free rows stay at 0.
    const double dSink = dist[jEnd];
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = done[j] ? dist[j] : dSink;
      q[j] += d;
      if (rowOfCol[j] >= 0) p[static_cast<std::size_t>(rowOfCol[j])] += d;
    }

    for (std::size_t j = jEnd;;) {
      const auto i = static_cast<std::size_t>(way[j]);
      const Index prev = colOfRow[i];
      colOfRow[i] = static_cast<Index>(j);
      rowOfCol[j] = static_cast<Index>(i);
      if (prev < 0) break;
      j = static_cast<std::size_t>(prev);
    }
  }
  return colOfRow;
}

Assignment finish(const Matrix& cost, std::vector<std::pair<Index, Index>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  Assignment out;
  out.totalCost = assignment_cost(cost, pairs);
  out.pairs = std::move(pairs);
  return out;
}

}  // namespace

double assignment_cost(const Matrix& cost, const std::vector<std::pair<Index, Index>>& pairs) {
  double total = 0.0;
  for (const auto& [i, a] : pairs) total += cost(i, a);
  return total;
}

Assignment solve_lap(const Matrix& cost) {
  require_finite(cost, "solve_lap");
  const Index m = cost.rows(), n = cost.cols();
  if (m > n) throw std::invalid_argument("solve_lap: requires rows <= cols");
  if (m == 0) return {};
  const auto colOfRow = shortest_paths(cost, m);
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) pairs.emplace_back(i, colOfRow[static_cast<std::size_t>(i)]);
  return finish(cost, std::move(pairs));
}

Assignment solve_klap(const Matrix& cost, Index k) {
  require_finite(cost, "solve_klap");
  const Index m = cost.rows(), n = cost.cols();
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("solve_klap: k out of range");
  if (m > n) {
    Assignment t = solve_klap(cost.transpose(), k);
    for (auto& p : t.pairs) std::swap(p.first, p.second);
    return finish(cost, std::move(t.pairs));
  }
  const auto colOfRow = shortest_paths(cost, k);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < m; ++i) {
    const Index j = colOfRow[static_cast<std::size_t>(i)];
    if (j >= 0) pairs.emplace_back(i, j);
  }
  if (static_cast<Index>(pairs.size()) != k)
    throw NumericalError("solve_klap: augmented assignment has wrong cardinality");
  return finish(cost, std::move(pairs));
}

Assignment solve_substochastic(const Matrix& cost) {
  require_finite(cost, "solve_substochastic");
  const Index m = cost.rows(), n = cost.cols();
  if (m == 0 || n == 0) return {};
  if (m > n) {
    Assignment t = solve_substochastic(cost.transpose());
    for (auto& p : t.pairs) std::swap(p.first, p.second);
    return finish(cost, std::move(t.pairs));
  }
  // Any partial assignment extends to a full row assignment of min(C, 0) at
  // equal cost and vice versa, so the two optima coincide.
  const Matrix clipped = cost.cwiseMin(0.0);
  const auto colOfRow = shortest_paths(clipped, m);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < m; ++i) {
    const Index j = colOfRow[static_cast<std::size_t>(i)];
    if (cost(i, j) < 0.0) pairs.emplace_back(i, j);
  }
  return finish(cost, std::move(pairs));
}

}  // namespace zac
