#include "zacgm/deformable.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace zac {

Normalization Normalization::identity(Index dim) { return {RowVector::Zero(dim), 1.0}; }

Normalization Normalization::fit(const Matrix& pts) {
  Normalization nz;
  nz.mean = pts.colwise().mean();
  const double rms = std::sqrt((pts.rowwise() - nz.mean).rowwise().squaredNorm().mean());
  if (!(rms > 0.0)) throw DegenerateGeometry("Normalization: all points coincide");
  nz.scale = rms;
  return nz;
}

Matrix Normalization::apply(const Matrix& pts) const {
  return (pts.rowwise() - mean) / scale;
}

Matrix Normalization::invert(const Matrix& pts) const {
  return (pts * scale).rowwise() + mean;
}

RigidTransform RigidTransform::identity(Index dim) {
  return {1.0, Matrix::Identity(dim, dim), RowVector::Zero(dim)};
}

Matrix RigidTransform::apply(const Matrix& pts) const {
  return ((s * pts) * R).rowwise() + t;
}

Matrix gaussian_kernel(const Matrix& X, const Matrix& Y, double beta) {
  Matrix G(X.rows(), Y.rows());
  const double denom = 2.0 * beta * beta;
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < Y.rows(); ++j)
      G(i, j) = std::exp(-(X.row(i) - Y.row(j)).squaredNorm() / denom);
  return G;
}

Matrix NonRigidTransform::apply(const Matrix& pts) const {
  const Matrix xn = source.apply(pts);
  const Matrix yn = xn + gaussian_kernel(xn, controlPoints, beta) * W;
  return target.invert(yn);
}

NonRigidTransform NonRigidTransform::identity(const Matrix& controlPoints, double beta,
                                              double lambdaR) {
  NonRigidTransform t;
  t.controlPoints = controlPoints;
  t.beta = beta;
  t.lambdaR = lambdaR;
  t.W = Matrix::Zero(controlPoints.rows(), controlPoints.cols());
  t.source = Normalization::identity(controlPoints.cols());
  t.target = Normalization::identity(controlPoints.cols());
  return t;
}

Matrix apply_transform(const Transform& tau, const Matrix& pts) {
  return std::visit([&](const auto& t) { return t.apply(pts); }, tau);
}

namespace {

void check_fit_inputs(const PointSet& V, const PointSet& Vp, const Correspondence& P,
                      const char* who) {
  if (P.rows() != V.size() || P.cols() != Vp.size())
    throw std::invalid_argument(std::string(who) + ": correspondence shape mismatch");
  if (V.dim() != Vp.dim()) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  if (!(P.mat.sum() > 0.0))
    throw std::invalid_argument(std::string(who) + ": correspondence has no mass");
}

}  // namespace

RigidTransform fit_rigid(const PointSet& V, const PointSet& Vp, const Correspondence& P) {
  check_fit_inputs(V, Vp, P, "fit_rigid");
  const Matrix& X = V.points;
  const Matrix& Y = Vp.points;
  const Vector r = P.mat.rowwise().sum();
  const Vector c = P.mat.colwise().sum().transpose();
  const double w = r.sum();
  const RowVector mu = (r.transpose() * X) / w;
  const RowVector muP = (c.transpose() * Y) / w;
  const Matrix Xc = X.rowwise() - mu;
  const Matrix Yc = Y.rowwise() - muP;

  const double varX = (r.array() * Xc.rowwise().squaredNorm().array()).sum();
  if (!(varX > 1e-300)) throw DegenerateGeometry("fit_rigid: matched source points coincide");

  // Column convention y = s Rc x; the row-vector rotation is Rc'.
  const Matrix H = Yc.transpose() * P.mat.transpose() * Xc;
  Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index d = X.cols();
  Vector fix = Vector::Ones(d);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) fix(d - 1) = -1.0;
  const Matrix Rc = svd.matrixU() * fix.asDiagonal() * svd.matrixV().transpose();

  RigidTransform out;
  out.R = Rc.transpose();
  out.s = svd.singularValues().dot(fix) / varX;
  if (!(out.s > 0.0)) throw DegenerateGeometry("fit_rigid: non-positive scale");
  out.t = muP - out.s * mu * out.R;
  return out;
}

NonRigidTransform fit_nonrigid(const PointSet& V, const PointSet& Vp, const Correspondence& P,
                               double beta, double lambdaR) {
  check_fit_inputs(V, Vp, P, "fit_nonrigid");
  if (!(beta > 0.0) || !(lambdaR > 0.0))
    throw std::invalid_argument("fit_nonrigid: beta and lambdaR must be positive");
  const Matrix& X = V.points;
  const Vector r = P.mat.rowwise().sum();
  const Matrix G = gaussian_kernel(X, X, beta);
  Matrix lhs = r.asDiagonal() * G;
  lhs.diagonal().array() += lambdaR;
  const Matrix rhs = P.mat * Vp.points - r.asDiagonal() * X;
  Eigen::PartialPivLU<Matrix> lu(lhs);
  NonRigidTransform out = NonRigidTransform::identity(X, beta, lambdaR);
  out.W = lu.solve(rhs);
  if (!out.W.allFinite()) throw NumericalError("fit_nonrigid: singular system");
  return out;
}

double registration_energy(const Transform& tau, const PointSet& V, const PointSet& Vp,
                           const Correspondence& P) {
  const Matrix TV = apply_transform(tau, V.points);
  double e = 0.0;
  for (Index i = 0; i < P.rows(); ++i)
    for (Index a = 0; a < P.cols(); ++a)
      if (P.mat(i, a) != 0.0) e += P.mat(i, a) * (Vp.points.row(a) - TV.row(i)).squaredNorm();
  if (const auto* nr = std::get_if<NonRigidTransform>(&tau)) {
    const Matrix G = gaussian_kernel(nr->controlPoints, nr->controlPoints, nr->beta);
    e += nr->lambdaR * (nr->W.transpose() * G * nr->W).trace();
  }
  return e;
}

double transform_error(const Transform& tau, const PointSet& V, const InlierPartition& gt,
                       const PointSet& Vp) {
  if (gt.tau.empty()) throw std::invalid_argument("transform_error: no ground-truth inliers");
  const Matrix TV = apply_transform(tau, V.points);
  double sum = 0.0;
  for (const auto& [i, a] : gt.tau) sum += (TV.row(i) - Vp.points.row(a)).norm();
  return sum / static_cast<double>(gt.tau.size());
}

DgmResult dgm_solve(const PointSet& ptsA, const PointSet& ptsB, Index k, DeformMode mode,
                    const DgmConfig& cfg) {
  if (ptsA.dim() != ptsB.dim()) throw std::invalid_argument("dgm_solve: dimension mismatch");
  if (cfg.maxIter < 1) throw std::invalid_argument("dgm_solve: maxIter must be >= 1");
  const Normalization normA = Normalization::fit(ptsA.points);
  const Normalization normB = Normalization::fit(ptsB.points);
  const PointSet VA(normA.apply(ptsA.points));
  const PointSet VB(normB.apply(ptsB.points));

  ProblemConfig pcfg{cfg.shape, cfg.weights};
  if (mode == DeformMode::rigid) pcfg.shape.rotationInvariant = true;

  Transform tau;
  if (mode == DeformMode::rigid)
    tau = RigidTransform::identity(VA.dim());
  else
    tau = NonRigidTransform::identity(VA.points, cfg.beta, cfg.lambdaR);

  DgmResult res;
  std::vector<std::vector<std::pair<Index, Index>>> seen;
  for (int it = 1; it <= cfg.maxIter; ++it) {
    const PointSet moved(apply_transform(tau, VA.points));
    res.match = match_with_removal(moved, VB, pcfg, k, cfg.removal);
    res.iterations = it;
    const Correspondence& P = res.match.solve.finalBinary;
    const auto pairs = P.pairs();
    if (pairs.empty()) break;

    FitStep step;
    step.before = registration_energy(tau, VA, VB, P);
    if (mode == DeformMode::rigid)
      tau = fit_rigid(VA, VB, P);
    else
      tau = fit_nonrigid(VA, VB, P, cfg.beta, cfg.lambdaR);
    step.after = registration_energy(tau, VA, VB, P);
    res.fitSteps.push_back(step);

    // A repeat of any earlier correspondence means the alternation has
    // settled into a fixed point or a cycle.
    if (std::find(seen.begin(), seen.end(), pairs) != seen.end()) break;
    seen.push_back(pairs);
  }

  // Express the normalized-space estimate in raw coordinates.
  if (auto* rigid = std::get_if<RigidTransform>(&tau)) {
    RigidTransform raw;
    raw.s = rigid->s * normB.scale / normA.scale;
    raw.R = rigid->R;
    raw.t = normB.mean + normB.scale * rigid->t - raw.s * normA.mean * raw.R;
    res.transform = raw;
  } else {
    auto nr = std::get<NonRigidTransform>(tau);
    nr.source = normA;
    nr.target = normB;
    res.transform = nr;
  }
  return res;
}

}  // namespace zac
