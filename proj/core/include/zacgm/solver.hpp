#pragma once

#include "zacgm/core.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace zac {

enum class InitMode { uniform, provided };

struct SolverConfig {
  int maxIter = 300;
  double tolRel = 1e-8;  // stop when (F_t - F_{t+1}) < tolRel * |F_t|
  double tolGap = 1e-8;  // stop when <grad F(P_t), P_t - P~> < tolGap
  InitMode initMode = InitMode::uniform;
  Matrix init;  // used when initMode == provided (problem orientation)

  // Pairs held at 1 in every iterate and every linear subproblem
  // (problem orientation). Used by the disturbed-optimum protocol.
  std::vector<std::pair<Index, Index>> fixedPairs;

  // Regularized variant only.
  int maxOuter = 10;
  double kChangeTol = 0.5;

  void validate() const;
};

struct SolveReport {
  Correspondence finalContinuous;
  Correspondence finalBinary;
  std::vector<double> objectiveTrace;
  std::vector<std::size_t> segmentStarts;  // first trace index of each inner run
  int iterations = 0;
  Index kFinal = 0;
  double kContinuous = 0.0;  // last real-valued k of the regularized variant
  double elapsed = 0.0;      // seconds
};

/// Frank-Wolfe on the mass-k relaxation; every linear subproblem is an exact
/// k-cardinality assignment, so all iterates keep 1'P1 = k.
SolveReport frank_wolfe_zac(const MatchProblem& prob, Index k, const SolverConfig& cfg = {});

/// Alternates Frank-Wolfe on F_r(., k) over the doubly-substochastic
/// polytope with k <- 1'P1, warm-starting each inner run from the previous
/// minimiser. k stays real-valued until the final rounding.
SolveReport frank_wolfe_zacr(const MatchProblem& prob, double k0, const SolverConfig& cfg = {});

/// Binary partial permutation of cardinality k maximising the selected mass.
Correspondence discretize(const Correspondence& Pcont, Index k,
                          const std::vector<std::pair<Index, Index>>& fixedPairs = {});

}  // namespace zac
