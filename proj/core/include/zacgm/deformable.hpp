#pragma once

#include "zacgm/core.hpp"
#include "zacgm/outliers.hpp"
#include "zacgm/problem.hpp"

#include <variant>

namespace zac {

/// x -> (x - mean) / scale, applied row-wise.
struct Normalization {
  RowVector mean;
  double scale = 1.0;

  static Normalization identity(Index dim);
  /// Zero mean, unit RMS distance to the mean.
  static Normalization fit(const Matrix& pts);

  Matrix apply(const Matrix& pts) const;
  Matrix invert(const Matrix& pts) const;
};

/// Similarity transform in row-vector convention: x -> s x R + t.
struct RigidTransform {
  double s = 1.0;
  Matrix R;
  RowVector t;

  static RigidTransform identity(Index dim);
  Matrix apply(const Matrix& pts) const;
};

/// Gaussian-RBF displacement field: x -> x + G(x, controlPoints) W, with
/// G_ij = exp(-|x_i - c_j|^2 / (2 beta^2)). Points are mapped through
/// `source` before and `target`^-1 after, so a field estimated in
/// normalized coordinates applies directly to raw coordinates.
struct NonRigidTransform {
  Matrix controlPoints;
  double beta = 2.0;
  Matrix W;
  double lambdaR = 0.1;
  Normalization source;
  Normalization target;

  Matrix apply(const Matrix& pts) const;
  /// Displacement-free transform on the given control points.
  static NonRigidTransform identity(const Matrix& controlPoints, double beta, double lambdaR);
};

using Transform = std::variant<RigidTransform, NonRigidTransform>;

Matrix apply_transform(const Transform& tau, const Matrix& pts);

/// Gaussian Gram matrix between the rows of X and Y.
Matrix gaussian_kernel(const Matrix& X, const Matrix& Y, double beta);

/// Weighted Procrustes with scale: minimises sum_ia P_ia |V'_a - (s V_i R + t)|^2.
RigidTransform fit_rigid(const PointSet& V, const PointSet& Vp, const Correspondence& P);

/// Closed-form minimiser of
///   sum_ia P_ia |V'_a - V_i - (GW)_i|^2 + lambdaR tr(W' G W)
/// via (diag(P1) G + lambdaR I) W = P V' - diag(P1) V.
NonRigidTransform fit_nonrigid(const PointSet& V, const PointSet& Vp, const Correspondence& P,
                               double beta, double lambdaR);

/// Residual energy of a correspondence under a transform (regularizer
/// included for non-rigid transforms).
double registration_energy(const Transform& tau, const PointSet& V, const PointSet& Vp,
                           const Correspondence& P);

/// Mean distance between transformed ground-truth inliers and their partners.
double transform_error(const Transform& tau, const PointSet& V, const InlierPartition& gt,
                       const PointSet& Vp);

enum class DeformMode { rigid, nonrigid };

struct DgmConfig {
  ShapeContextConfig shape;  // rotationInvariant is forced on for rigid mode
  Weights weights{1.0, 10.0, 1.0};
  RemovalConfig removal;
  double beta = 2.0;
  double lambdaR = 0.1;
  int maxIter = 10;
};

/// Registration energy for the fixed correspondence of one alternation,
/// before and after refitting the transform.
struct FitStep {
  double before = 0.0;
  double after = 0.0;
};

struct DgmResult {
  RemovalReport match;   // original indices
  Transform transform;   // maps raw ptsA coordinates onto ptsB
  int iterations = 0;
  std::vector<FitStep> fitSteps;  // normalized coordinates
};

/// Alternates correspondence estimation (outlier-removal matching on the
/// transformed source) with closed-form transform fitting, both in
/// normalized coordinates, until the binary correspondence repeats.
DgmResult dgm_solve(const PointSet& ptsA, const PointSet& ptsB, Index k, DeformMode mode,
                    const DgmConfig& cfg = {});

}  // namespace zac
