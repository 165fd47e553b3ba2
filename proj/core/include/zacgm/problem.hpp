#pragma once

#include "zacgm/core.hpp"
#include "zacgm/features.hpp"

namespace zac {

struct ProblemConfig {
  ShapeContextConfig shape;
  Weights weights;
};

/// Euclidean distance matrix between the rows of `pts`.
Matrix distance_matrix(const Matrix& pts);

/// Standard deviation of the off-diagonal entries of a square matrix.
double offdiag_stddev(const Matrix& E);

/// Edge weights 1/E and attributes exp(-E^2/sigma^2) for one graph, with
/// zero diagonals. `sigma` defaults to the off-diagonal std of E; if that is
/// zero the mean off-diagonal distance is used.
void graph_terms(const Matrix& E, Matrix& adj, Matrix& attr);

/// Complete-graph matching problem between two point sets: D from shape
/// context chi2 costs, edge weights from reciprocal distances, attributes
/// from a Gaussian of distances. Coincident points raise DegenerateGeometry.
MatchProblem build_problem(const PointSet& ptsA, const PointSet& ptsB,
                           const ProblemConfig& cfg = {});

}  // namespace zac
