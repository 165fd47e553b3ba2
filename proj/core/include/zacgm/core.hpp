#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zac {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Tolerance used when checking row/column sums of relaxed correspondences.
inline constexpr double kFeasibilityEps = 1e-9;

// Error hierarchy. Precondition violations use std::invalid_argument directly.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered d-dimensional points, one per row.
struct PointSet {
  Matrix points;
  std::vector<std::string> labels;  // empty, or one per point

  PointSet() = default;
  explicit PointSet(Matrix pts, std::vector<std::string> lbls = {});

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }

  /// Subset in the order given by `idx`; labels follow.
  PointSet select(std::span<const Index> idx) const;
};

struct Weights {
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

/// Graph matching instance in solver orientation (m <= n).
///
/// When the caller's first graph had more nodes than the second, the
/// sides are exchanged and `swapped` is set; use to_original() to map
/// correspondences back.
struct MatchProblem {
  Index m = 0;
  Index n = 0;
  Matrix D;      // m x n node dissimilarity
  Matrix adjA;   // m x m edge weights
  Matrix adjB;   // n x n
  Matrix attrA;  // m x m scalar edge attributes
  Matrix attrB;  // n x n
  Weights weights;
  bool swapped = false;

  double lambda0() const { return weights.lambda0; }
  double lambda1() const { return weights.lambda1; }
  double lambda2() const { return weights.lambda2; }
};

/// Validates shapes, symmetry, zero diagonals, finiteness, nonnegativity
/// and m <= n. Throws std::invalid_argument naming the offending field.
void validate(const MatchProblem& prob);

/// Assembles and validates a problem from raw matrices. If m > n the sides
/// are exchanged (D transposed) and the swap flag is set.
MatchProblem make_problem(Matrix D, Matrix adjA, Matrix adjB, Matrix attrA, Matrix attrB,
                          Weights weights = {});

/// Correspondence in the caller's orientation (m_orig x n_orig).
Matrix to_original(const MatchProblem& prob, const Matrix& P);
/// Inverse of to_original.
Matrix to_problem(const MatchProblem& prob, const Matrix& Porig);

/// Sub-problem on original-orientation node subsets. Unary and pairwise
/// blocks are copied, not recomputed.
MatchProblem restrict_problem(const MatchProblem& prob, std::span<const Index> rowsOrig,
                              std::span<const Index> colsOrig);

enum class CorrespondenceKind { continuous, binary };

struct Correspondence {
  Matrix mat;
  CorrespondenceKind kind = CorrespondenceKind::continuous;

  Index rows() const { return mat.rows(); }
  Index cols() const { return mat.cols(); }
  double mass() const { return mat.sum(); }
  bool binary() const { return kind == CorrespondenceKind::binary; }

  /// (row, col) pairs with entry == 1, row-major order. Binary only.
  std::vector<std::pair<Index, Index>> pairs() const;

  static Correspondence from_pairs(Index rows, Index cols,
                                   std::span<const std::pair<Index, Index>> pairs);
};

/// True iff entries are in [0,1] and row/column sums are <= 1 + eps.
bool is_substochastic(const Matrix& P, double eps = kFeasibilityEps);

/// True iff P is a 0/1 matrix with P1 <= 1, P'1 <= 1 and 1'P1 == k.
bool validate_partial_permutation(const Correspondence& P, Index k);

/// Ground-truth or predicted split into inliers/outliers with the partial
/// permutation `tau` from side-A inliers onto side-B inliers.
struct InlierPartition {
  std::vector<Index> inliersA, outliersA;
  std::vector<Index> inliersB, outliersB;
  std::map<Index, Index> tau;

  /// Checks the disjoint-union identities over {0..m-1} and {0..n-1} and
  /// that tau is a bijection inliersA -> inliersB.
  bool consistent(Index m, Index n) const;

  static InlierPartition from_pairs(Index m, Index n,
                                    std::span<const std::pair<Index, Index>> pairs);
};

struct MatchMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
  Index correct = 0;
  Index predicted = 0;
  Index truth = 0;
};

MatchMetrics metrics(const Correspondence& pred, const InlierPartition& gt);

}  // namespace zac
