#include "zacgm/core.hpp"
#include "zacgm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace zac {

PointSet::PointSet(Matrix pts, std::vector<std::string> lbls)
    : points(std::move(pts)), labels(std::move(lbls)) {
  if (points.rows() < 1) throw std::invalid_argument("PointSet: at least one point required");
  if (points.cols() < 2) throw std::invalid_argument("PointSet: dimension must be >= 2");
  if (!points.allFinite()) throw std::invalid_argument("PointSet: non-finite coordinate");
  if (!labels.empty() && static_cast<Index>(labels.size()) != points.rows())
    throw std::invalid_argument("PointSet: labels must match the number of points");
}

PointSet PointSet::select(std::span<const Index> idx) const {
  Matrix sub(static_cast<Index>(idx.size()), points.cols());
  std::vector<std::string> sublabels;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    sub.row(static_cast<Index>(r)) = points.row(idx[r]);
    if (!labels.empty()) sublabels.push_back(labels[static_cast<std::size_t>(idx[r])]);
  }
  return PointSet(std::move(sub), std::move(sublabels));
}

namespace {

void check_square(const Matrix& M, Index size, const char* name) {
  if (M.rows() != size || M.cols() != size)
    throw std::invalid_argument(std::string("MatchProblem: ") + name + " has wrong shape");
}

void check_graph_matrix(const Matrix& M, const char* name, bool nonnegative) {
  if (!M.allFinite()) throw std::invalid_argument(std::string("MatchProblem: ") + name + " not finite");
  if (nonnegative && (M.array() < 0.0).any())
    throw std::invalid_argument(std::string("MatchProblem: ") + name + " has negative entries");
  if (M.size() > 0 && M.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument(std::string("MatchProblem: ") + name + " diagonal must be 0");
  if (M != M.transpose())
    throw std::invalid_argument(std::string("MatchProblem: ") + name + " must be symmetric");
}

}  // namespace

void validate(const MatchProblem& prob) {
  if (prob.m < 1 || prob.n < 1) throw std::invalid_argument("MatchProblem: empty graph");
  if (prob.m > prob.n) throw std::invalid_argument("MatchProblem: requires m <= n");
  if (prob.D.rows() != prob.m || prob.D.cols() != prob.n)
    throw std::invalid_argument("MatchProblem: D has wrong shape");
  if (!prob.D.allFinite() || (prob.D.array() < 0.0).any())
    throw std::invalid_argument("MatchProblem: D must be finite and nonnegative");
  check_square(prob.adjA, prob.m, "adjA");
  check_square(prob.attrA, prob.m, "attrA");
  check_square(prob.adjB, prob.n, "adjB");
  check_square(prob.attrB, prob.n, "attrB");
  check_graph_matrix(prob.adjA, "adjA", true);
  check_graph_matrix(prob.adjB, "adjB", true);
  check_graph_matrix(prob.attrA, "attrA", false);
  check_graph_matrix(prob.attrB, "attrB", false);
  const auto& w = prob.weights;
  if (!(w.lambda0 >= 0.0) || !(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0) ||
      !std::isfinite(w.lambda0 + w.lambda1 + w.lambda2))
    throw std::invalid_argument("MatchProblem: weights must be finite and nonnegative");
}

MatchProblem make_problem(Matrix D, Matrix adjA, Matrix adjB, Matrix attrA, Matrix attrB,
                          Weights weights) {
  MatchProblem p;
  p.weights = weights;
  if (D.rows() > D.cols()) {
    p.swapped = true;
    p.D = D.transpose();
    std::swap(adjA, adjB);
    std::swap(attrA, attrB);
  } else {
    p.D = std::move(D);
  }
  p.m = p.D.rows();
  p.n = p.D.cols();
  p.adjA = std::move(adjA);
  p.adjB = std::move(adjB);
  p.attrA = std::move(attrA);
  p.attrB = std::move(attrB);
  validate(p);
  return p;
}

Matrix to_original(const MatchProblem& prob, const Matrix& P) {
  return prob.swapped ? Matrix(P.transpose()) : P;
}

Matrix to_problem(const MatchProblem& prob, const Matrix& Porig) {
  return prob.swapped ? Matrix(Porig.transpose()) : Porig;
}

MatchProblem restrict_problem(const MatchProblem& prob, std::span<const Index> rowsOrig,
                              std::span<const Index> colsOrig) {
  // Work in original orientation, then let make_problem re-orient.
  const Matrix Dorig = to_original(prob, prob.D);
  const Matrix& adjOrigA = prob.swapped ? prob.adjB : prob.adjA;
  const Matrix& adjOrigB = prob.swapped ? prob.adjA : prob.adjB;
  const Matrix& attrOrigA = prob.swapped ? prob.attrB : prob.attrA;
  const Matrix& attrOrigB = prob.swapped ? prob.attrA : prob.attrB;

  const auto r = static_cast<Index>(rowsOrig.size());
  const auto c = static_cast<Index>(colsOrig.size());
  Matrix D(r, c), aA(r, r), tA(r, r), aB(c, c), tB(c, c);
  for (Index i = 0; i < r; ++i) {
    for (Index a = 0; a < c; ++a) D(i, a) = Dorig(rowsOrig[i], colsOrig[a]);
    for (Index j = 0; j < r; ++j) {
      aA(i, j) = adjOrigA(rowsOrig[i], rowsOrig[j]);
      tA(i, j) = attrOrigA(rowsOrig[i], rowsOrig[j]);
    }
  }
  for (Index a = 0; a < c; ++a)
    for (Index b = 0; b < c; ++b) {
      aB(a, b) = adjOrigB(colsOrig[a], colsOrig[b]);
      tB(a, b) = attrOrigB(colsOrig[a], colsOrig[b]);
    }
  return make_problem(std::move(D), std::move(aA), std::move(aB), std::move(tA), std::move(tB),
                      prob.weights);
}

std::vector<std::pair<Index, Index>> Correspondence::pairs() const {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < mat.rows(); ++i)
    for (Index a = 0; a < mat.cols(); ++a)
      if (mat(i, a) == 1.0) out.emplace_back(i, a);
  return out;
}

Correspondence Correspondence::from_pairs(Index rows, Index cols,
                                          std::span<const std::pair<Index, Index>> pairs) {
  Correspondence c{Matrix::Zero(rows, cols), CorrespondenceKind::binary};
  for (const auto& [i, a] : pairs) {
    if (i < 0 || i >= rows || a < 0 || a >= cols)
      throw std::invalid_argument("Correspondence: pair index out of range");
    c.mat(i, a) = 1.0;
  }
  return c;
}

bool is_substochastic(const Matrix& P, double eps) {
  if (!P.allFinite()) return false;
  if (P.size() == 0) return true;
  if (P.minCoeff() < -eps || P.maxCoeff() > 1.0 + eps) return false;
  return P.rowwise().sum().maxCoeff() <= 1.0 + eps && P.colwise().sum().maxCoeff() <= 1.0 + eps;
}

bool validate_partial_permutation(const Correspondence& P, Index k) {
  const Matrix& M = P.mat;
  for (Index i = 0; i < M.size(); ++i) {
    const double v = M.data()[i];
    if (v != 0.0 && v != 1.0) return false;
  }
  if (M.size() > 0 &&
      (M.rowwise().sum().maxCoeff() > 1.0 || M.colwise().sum().maxCoeff() > 1.0))
    return false;
  return static_cast<Index>(M.sum()) == k;
}

bool InlierPartition::consistent(Index m, Index n) const {
  auto covers = [](const std::vector<Index>& in, const std::vector<Index>& out, Index size) {
    std::vector<int> seen(static_cast<std::size_t>(size), 0);
    for (Index v : in) {
      if (v < 0 || v >= size) return false;
      ++seen[static_cast<std::size_t>(v)];
    }
    for (Index v : out) {
      if (v < 0 || v >= size) return false;
      ++seen[static_cast<std::size_t>(v)];
    }
    return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
  };
  if (!covers(inliersA, outliersA, m) || !covers(inliersB, outliersB, n)) return false;
  if (inliersA.size() != inliersB.size() || tau.size() != inliersA.size()) return false;
  const std::set<Index> inA(inliersA.begin(), inliersA.end());
  std::set<Index> image;
  for (const auto& [i, a] : tau) {
    if (!inA.count(i)) return false;
    image.insert(a);
  }
  return image == std::set<Index>(inliersB.begin(), inliersB.end());
}

InlierPartition InlierPartition::from_pairs(Index m, Index n,
                                            std::span<const std::pair<Index, Index>> pairs) {
  InlierPartition part;
  std::vector<char> rowIn(static_cast<std::size_t>(m), 0), colIn(static_cast<std::size_t>(n), 0);
  for (const auto& [i, a] : pairs) {
    part.tau[i] = a;
    rowIn[static_cast<std::size_t>(i)] = 1;
    colIn[static_cast<std::size_t>(a)] = 1;
  }
  for (Index i = 0; i < m; ++i)
    (rowIn[static_cast<std::size_t>(i)] ? part.inliersA : part.outliersA).push_back(i);
  for (Index a = 0; a < n; ++a)
    (colIn[static_cast<std::size_t>(a)] ? part.inliersB : part.outliersB).push_back(a);
  return part;
}

MatchMetrics metrics(const Correspondence& pred, const InlierPartition& gt) {
  if (gt.tau.empty()) throw std::invalid_argument("metrics: ground truth has no matches");
  MatchMetrics out;
  out.truth = static_cast<Index>(gt.tau.size());
  for (const auto& [i, a] : pred.pairs()) {
    ++out.predicted;
    const auto it = gt.tau.find(i);
    if (it != gt.tau.end() && it->second == a) ++out.correct;
  }
  out.recall = static_cast<double>(out.correct) / static_cast<double>(out.truth);
  out.precision =
      out.predicted == 0 ? 0.0 : static_cast<double>(out.correct) / static_cast<double>(out.predicted);
  const double s = out.recall + out.precision;
  out.f_measure = s == 0.0 ? 0.0 : 2.0 * out.recall * out.precision / s;
  return out;
}

// --- problem construction -------------------------------------------------

Matrix distance_matrix(const Matrix& pts) {
  const Index N = pts.rows();
  Matrix E = Matrix::Zero(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = i + 1; j < N; ++j) E(i, j) = E(j, i) = (pts.row(i) - pts.row(j)).norm();
  return E;
}

double offdiag_stddev(const Matrix& E) {
  const Index N = E.rows();
  if (N < 2) return 0.0;
  double sum = 0.0, sq = 0.0;
  const double count = static_cast<double>(N * (N - 1));
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j)
      if (i != j) sum += E(i, j);
  const double mean = sum / count;
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j)
      if (i != j) sq += (E(i, j) - mean) * (E(i, j) - mean);
  return std::sqrt(sq / count);
}

void graph_terms(const Matrix& E, Matrix& adj, Matrix& attr) {
  const Index N = E.rows();
  adj = Matrix::Zero(N, N);
  attr = Matrix::Zero(N, N);
  if (N < 2) return;
  double sigma = offdiag_stddev(E);
  if (!(sigma > 0.0)) sigma = E.sum() / static_cast<double>(N * (N - 1));
  const double s2 = sigma * sigma;
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      if (i == j) continue;
      if (!(E(i, j) > 0.0))
        throw DegenerateGeometry("coincident points " + std::to_string(i) + " and " +
                                 std::to_string(j));
      adj(i, j) = 1.0 / E(i, j);
      attr(i, j) = std::exp(-E(i, j) * E(i, j) / s2);
    }
}

MatchProblem build_problem(const PointSet& ptsA, const PointSet& ptsB, const ProblemConfig& cfg) {
  if (ptsA.size() < 1 || ptsB.size() < 1)
    throw std::invalid_argument("build_problem: point sets must be nonempty");
  if (ptsA.dim() != ptsB.dim()) throw std::invalid_argument("build_problem: dimension mismatch");
  Matrix adjA, attrA, adjB, attrB;
  graph_terms(distance_matrix(ptsA.points), adjA, attrA);
  graph_terms(distance_matrix(ptsB.points), adjB, attrB);
  Matrix D;
  if (ptsA.size() >= 2 && ptsB.size() >= 2) {
    D = pairwise_cost(build_descriptors(ptsA, cfg.shape), build_descriptors(ptsB, cfg.shape));
  } else {
    // A lone point has no shape context; all unary costs are equal.
    D = Matrix::Zero(ptsA.size(), ptsB.size());
  }
  return make_problem(std::move(D), std::move(adjA), std::move(adjB), std::move(attrA),
                      std::move(attrB), cfg.weights);
}

}  // namespace zac
