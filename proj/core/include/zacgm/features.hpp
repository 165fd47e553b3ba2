#pragma once

#include "zacgm/core.hpp"

#include <vector>

namespace zac {

/// Log-polar shape-context binning. Radii are expressed as fractions of the
/// mean pairwise distance of the point set.
struct ShapeContextConfig {
  int radialBins = 5;
  int angularBins = 12;
  double rMin = 0.125;
  double rMax = 2.0;
  bool rotationInvariant = false;

  void validate() const;
};

/// radialBins x angularBins histogram, entries summing to 1.
using Histogram = Eigen::MatrixXd;

/// Shape context of point `i` relative to all other points of `pts`.
///
/// Radial bin edges are log-spaced on [rMin, rMax]; distances outside that
/// range are clamped into the innermost/outermost bin. Bins are half-open,
/// [lo, hi), so a value on an edge lands in the bin starting at that edge.
/// With rotationInvariant the angle origin is the direction from point i to
/// the centroid (or the x axis if point i sits on the centroid).
Histogram shape_context(const PointSet& pts, Index i, const ShapeContextConfig& cfg);

/// Half the sum over bins of (h1-h2)^2/(h1+h2); empty bins contribute 0.
double chi2_cost(const Histogram& h1, const Histogram& h2);

std::vector<Histogram> build_descriptors(const PointSet& pts, const ShapeContextConfig& cfg);

/// D(i, a) = chi2_cost(descA[i], descB[a]).
Matrix pairwise_cost(const std::vector<Histogram>& descA, const std::vector<Histogram>& descB);

}  // namespace zac
