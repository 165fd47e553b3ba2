#include "zacgm/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace zac {

void ShapeContextConfig::validate() const {
  if (radialBins < 2) throw std::invalid_argument("ShapeContextConfig: radialBins must be >= 2");
  if (angularBins < 4) throw std::invalid_argument("ShapeContextConfig: angularBins must be >= 4");
  if (!(rMin > 0.0) || !(rMin < rMax))
    throw std::invalid_argument("ShapeContextConfig: need 0 < rMin < rMax");
}

namespace {

double mean_pairwise_distance(const Matrix& pts) {
  const Index N = pts.rows();
  double sum = 0.0;
  for (Index i = 0; i < N; ++i)
    for (Index j = i + 1; j < N; ++j) sum += (pts.row(i) - pts.row(j)).norm();
  return sum / (0.5 * static_cast<double>(N * (N - 1)));
}

Histogram histogram_at(const Matrix& pts, Index i, double meanDist, const RowVector& centroid,
                       const ShapeContextConfig& cfg) {
  const Index N = pts.rows();
  Histogram h = Histogram::Zero(cfg.radialBins, cfg.angularBins);

  double ref = 0.0;
  if (cfg.rotationInvariant) {
    const RowVector toCentroid = centroid - pts.row(i);
    if (toCentroid.head<2>().norm() > 1e-12 * std::max(1.0, meanDist))
      ref = std::atan2(toCentroid(1), toCentroid(0));
  }

  const double logMin = std::log(cfg.rMin);
  const double logSpan = std::log(cfg.rMax) - logMin;
  const double twoPi = 2.0 * std::numbers::pi;
  Index counted = 0;
  for (Index j = 0; j < N; ++j) {
    if (j == i) continue;
    const RowVector diff = pts.row(j) - pts.row(i);
    const double dist = diff.norm();
    if (dist == 0.0) continue;  // coincident neighbours carry no direction
    const double r = dist / meanDist;
    int rb = static_cast<int>(std::floor(cfg.radialBins * (std::log(r) - logMin) / logSpan));
    rb = std::clamp(rb, 0, cfg.radialBins - 1);

    double theta = std::atan2(diff(1), diff(0)) - ref;
    theta = std::fmod(theta, twoPi);
    if (theta < 0.0) theta += twoPi;
    int ab = static_cast<int>(std::floor(theta / twoPi * cfg.angularBins));
    ab = std::clamp(ab, 0, cfg.angularBins - 1);
    h(rb, ab) += 1.0;
    ++counted;
  }
  if (counted == 0)
    throw DegenerateGeometry("shape_context: all other points coincide with point " +
                             std::to_string(i));
  return h / static_cast<double>(counted);
}

}  // namespace

Histogram shape_context(const PointSet& pts, Index i, const ShapeContextConfig& cfg) {
  cfg.validate();
  if (pts.size() < 2) throw std::invalid_argument("shape_context: need at least 2 points");
  if (i < 0 || i >= pts.size()) throw std::invalid_argument("shape_context: index out of range");
  const double meanDist = mean_pairwise_distance(pts.points);
  if (!(meanDist > 0.0)) throw DegenerateGeometry("shape_context: all points coincide");
  const RowVector centroid = pts.points.colwise().mean();
  return histogram_at(pts.points, i, meanDist, centroid, cfg);
}

double chi2_cost(const Histogram& h1, const Histogram& h2) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols())
    throw std::invalid_argument("chi2_cost: histogram shape mismatch");
  double acc = 0.0;
  for (Index b = 0; b < h1.size(); ++b) {
    const double s = h1.data()[b] + h2.data()[b];
    if (s > 0.0) {
      const double d = h1.data()[b] - h2.data()[b];
      acc += d * d / s;
    }
  }
  return 0.5 * acc;
}

std::vector<Histogram> build_descriptors(const PointSet& pts, const ShapeContextConfig& cfg) {
  cfg.validate();
  if (pts.size() < 2) throw std::invalid_argument("build_descriptors: need at least 2 points");
  const double meanDist = mean_pairwise_distance(pts.points);
  if (!(meanDist > 0.0)) throw DegenerateGeometry("build_descriptors: all points coincide");
  const RowVector centroid = pts.points.colwise().mean();
  std::vector<Histogram> out;
  out.reserve(static_cast<std::size_t>(pts.size()));
  for (Index i = 0; i < pts.size(); ++i)
    out.push_back(histogram_at(pts.points, i, meanDist, centroid, cfg));
  return out;
}

Matrix pairwise_cost(const std::vector<Histogram>& descA, const std::vector<Histogram>& descB) {
  Matrix D(static_cast<Index>(descA.size()), static_cast<Index>(descB.size()));
  for (std::size_t i = 0; i < descA.size(); ++i)
    for (std::size_t a = 0; a < descB.size(); ++a)
      D(static_cast<Index>(i), static_cast<Index>(a)) = chi2_cost(descA[i], descB[a]);
  return D;
}

}  // namespace zac
