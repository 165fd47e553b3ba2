#include "zacgm/outliers.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace zac {

std::vector<JointPoint> joint_probabilities(const Correspondence& Phat,
                                            const Correspondence& coupling) {
  const Index m = Phat.rows(), n = Phat.cols();
  if (coupling.rows() != m || coupling.cols() != n)
    throw std::invalid_argument("joint_probabilities: shape mismatch");
  const Vector rowMass = Phat.mat.rowwise().sum();
  const RowVector colMass = Phat.mat.colwise().sum();

  std::vector<Index> partnerOfRow(static_cast<std::size_t>(m), -1);
  std::vector<Index> partnerOfCol(static_cast<std::size_t>(n), -1);
  for (const auto& [i, a] : coupling.pairs()) {
    partnerOfRow[static_cast<std::size_t>(i)] = a;
    partnerOfCol[static_cast<std::size_t>(a)] = i;
  }

  std::vector<JointPoint> out;
  out.reserve(static_cast<std::size_t>(m + n));
  for (Index i = 0; i < m; ++i) {
    const Index a = partnerOfRow[static_cast<std::size_t>(i)];
    out.push_back({Side::A, i, {rowMass(i), a >= 0 ? colMass(a) : 0.0}});
  }
  for (Index a = 0; a < n; ++a) {
    const Index i = partnerOfCol[static_cast<std::size_t>(a)];
    out.push_back({Side::B, a, {i >= 0 ? rowMass(i) : 0.0, colMass(a)}});
  }
  return out;
}

std::vector<Cluster> two_means(const std::vector<Eigen::Vector2d>& points, int maxIter) {
  if (points.size() < 2) throw std::invalid_argument("two_means: need at least 2 points");
  const std::size_t N = points.size();
  std::size_t lo = 0, hi = 0;
  for (std::size_t p = 1; p < N; ++p) {
    if (points[p].sum() < points[lo].sum()) lo = p;
    if (points[p].sum() > points[hi].sum()) hi = p;
  }
  if (points[lo] == points[hi]) {
    // Equal coordinate sums everywhere: seed the second centroid far away.
    double best = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      const double d = (points[p] - points[lo]).squaredNorm();
      if (d > best) {
        best = d;
        hi = p;
      }
    }
    if (best == 0.0) return std::vector<Cluster>(N, Cluster::inlier);
  }

  Eigen::Vector2d low = points[lo], high = points[hi];
  std::vector<int> assign(N, -1);
  for (int it = 0; it < maxIter; ++it) {
    bool changed = false;
    for (std::size_t p = 0; p < N; ++p) {
      const int c = (points[p] - high).squaredNorm() < (points[p] - low).squaredNorm() ? 1 : 0;
      if (c != assign[p]) {
        assign[p] = c;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::Vector2d sum[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
    std::size_t count[2] = {0, 0};
    for (std::size_t p = 0; p < N; ++p) {
      sum[assign[p]] += points[p];
      ++count[assign[p]];
    }
    if (count[0]) low = sum[0] / static_cast<double>(count[0]);
    if (count[1]) high = sum[1] / static_cast<double>(count[1]);
  }
  const int inlierCluster = high.sum() >= low.sum() ? 1 : 0;
  std::vector<Cluster> labels(N);
  for (std::size_t p = 0; p < N; ++p)
    labels[p] = assign[p] == inlierCluster ? Cluster::inlier : Cluster::outlier;
  return labels;
}

namespace {

std::vector<Index> refine_side(const std::vector<const JointPoint*>& side,
                               const std::vector<Cluster>& sideLabels, Index k) {
  if (static_cast<Index>(side.size()) < k)
    throw std::invalid_argument("refine_inliers: fewer than k nodes on a side");
  std::vector<std::size_t> in, out;
  for (std::size_t p = 0; p < side.size(); ++p)
    (sideLabels[p] == Cluster::inlier ? in : out).push_back(p);

  auto byMassDesc = [&](std::size_t x, std::size_t y) {
    const double cx = side[x]->component(), cy = side[y]->component();
    return cx != cy ? cx > cy : x < y;
  };
  const auto have = static_cast<Index>(in.size());
  if (have < k) {
    std::sort(out.begin(), out.end(), byMassDesc);
    in.insert(in.end(), out.begin(), out.begin() + (k - have));
  } else if (have > k) {
    std::vector<std::size_t> weak;
    for (std::size_t p : in)
      if (side[p]->component() < 0.5) weak.push_back(p);
    std::sort(weak.begin(), weak.end(), byMassDesc);
    // Drop the weakest first, but never below k survivors.
    Index drop = std::min<Index>(static_cast<Index>(weak.size()), have - k);
    std::vector<char> removed(side.size(), 0);
    for (Index d = 0; d < drop; ++d) removed[weak[weak.size() - 1 - static_cast<std::size_t>(d)]] = 1;
    in.erase(std::remove_if(in.begin(), in.end(), [&](std::size_t p) { return removed[p] != 0; }),
             in.end());
  }
  std::vector<Index> idx;
  idx.reserve(in.size());
  for (std::size_t p : in) idx.push_back(side[p]->index);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

InlierSets refine_inliers(const std::vector<JointPoint>& points,
                          const std::vector<Cluster>& labels, Index k) {
  if (points.size() != labels.size())
    throw std::invalid_argument("refine_inliers: labels do not match points");
  if (k < 1) throw std::invalid_argument("refine_inliers: k must be >= 1");
  std::vector<const JointPoint*> sideA, sideB;
  std::vector<Cluster> labA, labB;
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (points[p].side == Side::A) {
      sideA.push_back(&points[p]);
      labA.push_back(labels[p]);
    } else {
      sideB.push_back(&points[p]);
      labB.push_back(labels[p]);
    }
  }
  return {refine_side(sideA, labA, k), refine_side(sideB, labB, k)};
}

namespace {

struct Round {
  MatchProblem prob;
  SolveReport rep;
  std::vector<Index> keptA, keptB;
};

std::vector<Index> iota_indices(Index count) {
  std::vector<Index> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

Matrix pad_back(const Matrix& sub, const std::vector<Index>& rows, const std::vector<Index>& cols,
                Index m, Index n) {
  Matrix full = Matrix::Zero(m, n);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      full(rows[r], cols[c]) = sub(static_cast<Index>(r), static_cast<Index>(c));
  return full;
}

}  // namespace

RemovalReport match_with_removal(const ProblemSource& source, Index m, Index n, Index k,
                                 const RemovalConfig& cfg) {
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("match_with_removal: k out of range");
  if (cfg.maxRounds < 1) throw std::invalid_argument("match_with_removal: maxRounds must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Index> keptA = iota_indices(m), keptB = iota_indices(n);
  Index kCur = k;
  std::optional<Round> last;
  RemovalReport out;

  for (int round = 1; round <= cfg.maxRounds; ++round) {
    MatchProblem prob = source(keptA, keptB);
    const Index kEff = std::min({kCur, prob.m});
    SolveReport rep;
    try {
      rep = cfg.method == Method::zac
                ? frank_wolfe_zac(prob, kEff, cfg.solver)
                : frank_wolfe_zacr(prob, static_cast<double>(kEff), cfg.solver);
    } catch (const NumericalError&) {
      // A ZACR collapse after removal: keep the previous round.
      if (!last) throw;
      out.warning = true;
      break;
    }
    last = Round{std::move(prob), std::move(rep), keptA, keptB};
    out.rounds = round;
    if (!cfg.removal) break;

    const Correspondence Pcont{to_original(last->prob, last->rep.finalContinuous.mat),
                               CorrespondenceKind::continuous};
    const Correspondence Pbin{to_original(last->prob, last->rep.finalBinary.mat),
                              CorrespondenceKind::binary};
    const auto joint = joint_probabilities(Pcont, Pbin);
    std::vector<Eigen::Vector2d> coords;
    coords.reserve(joint.size());
    for (const auto& jp : joint) coords.push_back(jp.coord);
    const auto labels = two_means(coords);

    const Index kRef = cfg.method == Method::zac ? k : last->rep.kFinal;
    InlierSets refined;
    try {
      refined = refine_inliers(joint, labels, kRef);
    } catch (const std::invalid_argument&) {
      out.warning = true;
      break;
    }
    for (auto& i : refined.inliersA) i = keptA[static_cast<std::size_t>(i)];
    for (auto& a : refined.inliersB) a = keptB[static_cast<std::size_t>(a)];
    if (refined.inliersA == keptA && refined.inliersB == keptB) break;
    if (static_cast<Index>(refined.inliersA.size()) < kRef ||
        static_cast<Index>(refined.inliersB.size()) < kRef) {
      out.warning = true;
      break;
    }
    keptA = std::move(refined.inliersA);
    keptB = std::move(refined.inliersB);
    if (cfg.method == Method::zacr) kCur = last->rep.kFinal;
  }

  out.solve = std::move(last->rep);
  out.solve.finalContinuous.mat =
      pad_back(to_original(last->prob, out.solve.finalContinuous.mat), last->keptA, last->keptB, m, n);
  out.solve.finalBinary.mat =
      pad_back(to_original(last->prob, out.solve.finalBinary.mat), last->keptA, last->keptB, m, n);
  out.keptA = last->keptA;
  out.keptB = last->keptB;
  const auto pairs = out.solve.finalBinary.pairs();
  out.partition = InlierPartition::from_pairs(m, n, pairs);
  out.solve.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RemovalReport match_with_removal(const MatchProblem& prob, Index k, const RemovalConfig& cfg) {
  const Index m = prob.swapped ? prob.n : prob.m;
  const Index n = prob.swapped ? prob.m : prob.n;
  return match_with_removal(
      [&](const std::vector<Index>& rows, const std::vector<Index>& cols) {
        return restrict_problem(prob, rows, cols);
      },
      m, n, k, cfg);
}

RemovalReport match_with_removal(const PointSet& ptsA, const PointSet& ptsB,
                                 const ProblemConfig& pcfg, Index k, const RemovalConfig& cfg) {
  return match_with_removal(
      [&](const std::vector<Index>& rows, const std::vector<Index>& cols) {
        return build_problem(ptsA.select(rows), ptsB.select(cols), pcfg);
      },
      ptsA.size(), ptsB.size(), k, cfg);
}

}  // namespace zac
