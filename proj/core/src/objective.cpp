#include "zacgm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace zac {

namespace {

void check_shape(const MatchProblem& prob, const Matrix& P, const char* who) {
  if (P.rows() != prob.m || P.cols() != prob.n)
    throw std::invalid_argument(std::string(who) + ": correspondence shape mismatch");
}

double poly_eval(const std::array<double, 5>& c, double x) {
  return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

double cubic_deriv(const std::array<double, 5>& c, double x) {
  return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

}  // namespace

ObjectiveValue objective(const MatchProblem& prob, const Matrix& P) {
  check_shape(prob, P, "objective");
  ObjectiveValue v;
  v.unary = prob.D.cwiseProduct(P).sum();
  const Matrix R1 = P * prob.attrB * P.transpose() - prob.attrA;
  const Matrix R2 = P.transpose() * prob.attrA * P - prob.attrB;
  v.pairwise = prob.adjA.cwiseProduct(R1.cwiseAbs2()).sum() +
               prob.adjB.cwiseProduct(R2.cwiseAbs2()).sum();
  v.total = prob.lambda1() * v.unary + prob.lambda2() * v.pairwise;
  return v;
}

ObjectiveValue objective_reg(const MatchProblem& prob, const Matrix& P, double k) {
  ObjectiveValue v = objective(prob, P);
  const double gap = P.sum() - k;
  v.regularizer = gap * gap;
  v.total += prob.lambda0() * v.regularizer;
  return v;
}

Matrix gradient(const MatchProblem& prob, const Matrix& P) {
  check_shape(prob, P, "gradient");
  Matrix G = prob.lambda1() * prob.D;
  if (prob.lambda2() != 0.0) {
    const Matrix PB = P * prob.attrB;
    const Matrix AP = prob.attrA * P;
    const Matrix W1 = 4.0 * (PB * P.transpose() - prob.attrA).cwiseProduct(prob.adjA);
    const Matrix W2 = 4.0 * (P.transpose() * AP - prob.attrB).cwiseProduct(prob.adjB);
    // B and W2 are symmetric, so PB^T = PB and W2^T = W2.
    G.noalias() += prob.lambda2() * (W1 * PB);
    G.noalias() += prob.lambda2() * (AP * W2);
  }
  return G;
}

Matrix gradient_reg(const MatchProblem& prob, const Matrix& P, double k) {
  Matrix G = gradient(prob, P);
  G.array() += 2.0 * prob.lambda0() * (P.sum() - k);
  return G;
}

std::array<double, 5> step_polynomial(const MatchProblem& prob, const Matrix& P,
                                      const Matrix& Pnext, std::optional<double> regK) {
  check_shape(prob, P, "step_polynomial");
  check_shape(prob, Pnext, "step_polynomial");
  const Matrix dir = Pnext - P;
  const Matrix& A = prob.attrA;
  const Matrix& B = prob.attrB;

  // P(a) B P(a)' - A = R0 + a R1 + a^2 R2, likewise S* for the other side.
  const Matrix PB = P * B;
  const Matrix dB = dir * B;
  const Matrix cross1 = PB * dir.transpose();
  const Matrix R0 = PB * P.transpose() - A;
  const Matrix R1 = cross1 + cross1.transpose();
  const Matrix R2 = dB * dir.transpose();

  const Matrix AP = A * P;
  const Matrix Ad = A * dir;
  const Matrix cross2 = P.transpose() * Ad;
  const Matrix S0 = P.transpose() * AP - B;
  const Matrix S1 = cross2 + cross2.transpose();
  const Matrix S2 = dir.transpose() * Ad;

  const Matrix& E1 = prob.adjA;
  const Matrix& E2 = prob.adjB;
  auto wsum = [](const Matrix& E, const Matrix& X, const Matrix& Y) {
    return E.cwiseProduct(X).cwiseProduct(Y).sum();
  };

  const double l1 = prob.lambda1(), l2 = prob.lambda2();
  std::array<double, 5> c{};
  c[0] = l1 * prob.D.cwiseProduct(P).sum() + l2 * (wsum(E1, R0, R0) + wsum(E2, S0, S0));
  c[1] = l1 * prob.D.cwiseProduct(dir).sum() +
         l2 * 2.0 * (wsum(E1, R0, R1) + wsum(E2, S0, S1));
  c[2] = l2 * (wsum(E1, R1, R1) + 2.0 * wsum(E1, R0, R2) + wsum(E2, S1, S1) +
               2.0 * wsum(E2, S0, S2));
  c[3] = l2 * 2.0 * (wsum(E1, R1, R2) + wsum(E2, S1, S2));
  c[4] = l2 * (wsum(E1, R2, R2) + wsum(E2, S2, S2));

  if (regK) {
    const double s = P.sum() - *regK;
    const double t = dir.sum();
    c[0] += prob.lambda0() * s * s;
    c[1] += prob.lambda0() * 2.0 * s * t;
    c[2] += prob.lambda0() * t * t;
  }
  for (double v : c)
    if (!std::isfinite(v)) throw NumericalError("line search: non-finite objective coefficients");
  return c;
}

double minimize_quartic_unit(const std::array<double, 5>& c) {
  std::vector<double> candidates{0.0, 1.0};

  // Split [0,1] where phi'' changes sign; phi' is monotone on each piece.
  std::vector<double> knots{0.0};
  const double qa = 12.0 * c[4], qb = 6.0 * c[3], qc = 2.0 * c[2];
  if (qa != 0.0) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double r : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
        if (r > 0.0 && r < 1.0) knots.push_back(r);
    }
  } else if (qb != 0.0) {
    const double r = -qc / qb;
    if (r > 0.0 && r < 1.0) knots.push_back(r);
  }
  knots.push_back(1.0);
  std::sort(knots.begin(), knots.end());

  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    double lo = knots[s], hi = knots[s + 1];
    double flo = cubic_deriv(c, lo), fhi = cubic_deriv(c, hi);
    if (flo == 0.0) {
      candidates.push_back(lo);
      continue;
    }
    if ((flo < 0.0) == (fhi < 0.0)) continue;
    for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = cubic_deriv(c, mid);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    candidates.push_back(0.5 * (lo + hi));
  }

  std::sort(candidates.begin(), candidates.end());
  double best = 0.0, bestVal = poly_eval(c, 0.0);
  for (double x : candidates) {
    const double v = poly_eval(c, x);
    if (!std::isfinite(v)) throw NumericalError("line search: non-finite objective value");
    if (v < bestVal) {
      bestVal = v;
      best = x;
    }
  }
  return best;
}

double line_search(const MatchProblem& prob, const Matrix& P, const Matrix& Pnext,
                   std::optional<double> regK) {
  if (P == Pnext) return 0.0;
  return minimize_quartic_unit(step_polynomial(prob, P, Pnext, regK));
}

}  // namespace zac
