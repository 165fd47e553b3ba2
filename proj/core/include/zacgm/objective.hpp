#pragma once

#include "zacgm/core.hpp"

#include <array>
#include <optional>

namespace zac {

struct ObjectiveValue {
  double total = 0.0;
  double unary = 0.0;
  double pairwise = 0.0;
  double regularizer = 0.0;
};

/// F(P) = lambda1 * sum(D .* P)
///      + lambda2 * (||A - P B P'||^2_E + ||B - P' A P||^2_E').
/// Never forms the mn x mn affinity matrix; cost is O(m^2 n + m n^2).
ObjectiveValue objective(const MatchProblem& prob, const Matrix& P);

/// F(P) + lambda0 * (1'P1 - k)^2.
ObjectiveValue objective_reg(const MatchProblem& prob, const Matrix& P, double k);

/// Gradient of F. With scalar attributes ||x|| sign(x) = x, so the edge
/// weights reduce to W1 = 4 (PBP' - A) .* E and W2 = 4 (P'AP - B) .* E'.
Matrix gradient(const MatchProblem& prob, const Matrix& P);

/// gradient(P) + 2 lambda0 (1'P1 - k) on every entry.
Matrix gradient_reg(const MatchProblem& prob, const Matrix& P, double k);

/// Coefficients c0..c4 of phi(alpha) = F(P + alpha (Pnext - P)) (or F_r when
/// regK is set). The objective is a quartic in alpha; the coefficients are
/// expanded in closed form from the residual matrices.
std::array<double, 5> step_polynomial(const MatchProblem& prob, const Matrix& P,
                                      const Matrix& Pnext, std::optional<double> regK = {});

/// argmin of a quartic over [0, 1]; prefers the smallest alpha among ties,
/// so a constant polynomial yields 0.
double minimize_quartic_unit(const std::array<double, 5>& c);

/// Exact line search along Pnext - P on [0, 1]. The returned step never
/// increases the polynomial model above phi(0).
double line_search(const MatchProblem& prob, const Matrix& P, const Matrix& Pnext,
                   std::optional<double> regK = {});

}  // namespace zac
