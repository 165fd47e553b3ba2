#pragma once

#include "zacgm/core.hpp"
#include "zacgm/problem.hpp"
#include "zacgm/solver.hpp"

#include <functional>
#include <vector>

namespace zac {

enum class Side { A, B };

/// A node placed in the joint-probability plane: x is the row mass of the
/// side-A node of its coupled pair, y the column mass of the side-B node.
struct JointPoint {
  Side side = Side::A;
  Index index = 0;
  Eigen::Vector2d coord = Eigen::Vector2d::Zero();

  /// Row mass for side A, column mass for side B.
  double component() const { return side == Side::A ? coord.x() : coord.y(); }
};

/// m + n joint points (all of side A, then all of side B). Pairs are taken
/// from the binary `coupling`; uncoupled nodes get partner mass 0.
std::vector<JointPoint> joint_probabilities(const Correspondence& Phat,
                                            const Correspondence& coupling);

enum class Cluster { inlier, outlier };

/// Deterministic 2-means in the plane. Centroids start at the points with
/// minimum and maximum coordinate sum; the cluster with the larger centroid
/// sum is the inlier cluster. Identical points are all inliers.
std::vector<Cluster> two_means(const std::vector<Eigen::Vector2d>& points, int maxIter = 100);

struct InlierSets {
  std::vector<Index> inliersA;
  std::vector<Index> inliersB;
};

/// Adjusts the clustering so that each side keeps at least k inliers:
/// short sides promote their highest-mass outliers, long sides demote
/// inliers whose mass is below 0.5 (never dropping under k).
InlierSets refine_inliers(const std::vector<JointPoint>& points,
                          const std::vector<Cluster>& labels, Index k);

enum class Method { zac, zacr };

struct RemovalConfig {
  Method method = Method::zac;
  SolverConfig solver;
  int maxRounds = 10;
  bool removal = true;  // false: a single solve, no outlier loop
};

struct RemovalReport {
  SolveReport solve;            // correspondences padded back to the full graphs
  InlierPartition partition;    // predicted, original indices
  std::vector<Index> keptA, keptB;  // surviving node sets of the final round
  int rounds = 0;
  bool warning = false;         // a round left fewer than k nodes or collapsed; last valid round returned
};

/// Builds the matching problem on the given original-orientation node subsets.
using ProblemSource =
    std::function<MatchProblem(const std::vector<Index>& rows, const std::vector<Index>& cols)>;

/// Iterative solve / identify / remove loop. Each round solves on the
/// current node subsets, clusters the joint masses, refines the inlier sets
/// and rebuilds the problem on the survivors, until the sets repeat or
/// maxRounds is hit. Removed nodes have exactly zero rows/columns in the
/// returned correspondences.
RemovalReport match_with_removal(const ProblemSource& source, Index m, Index n, Index k,
                                 const RemovalConfig& cfg = {});

/// Problem-level variant: sub-problems are submatrices of `prob`.
RemovalReport match_with_removal(const MatchProblem& prob, Index k, const RemovalConfig& cfg = {});

/// Point-level variant: each round recomputes descriptors and graph terms
/// on the surviving points.
RemovalReport match_with_removal(const PointSet& ptsA, const PointSet& ptsB,
                                 const ProblemConfig& pcfg, Index k,
                                 const RemovalConfig& cfg = {});

}  // namespace zac
