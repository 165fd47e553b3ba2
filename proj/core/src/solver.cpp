#include "zacgm/solver.hpp"

#include "zacgm/lap.hpp"
#include "zacgm/objective.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>

namespace zac {

void SolverConfig::validate() const {
  if (maxIter < 1) throw std::invalid_argument("SolverConfig: maxIter must be >= 1");
  if (!(tolRel > 0.0) || !(tolGap > 0.0))
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (maxOuter < 1) throw std::invalid_argument("SolverConfig: maxOuter must be >= 1");
  if (!(kChangeTol > 0.0)) throw std::invalid_argument("SolverConfig: kChangeTol must be positive");
}

namespace {

using Pairs = std::vector<std::pair<Index, Index>>;

struct FreeBlock {
  std::vector<Index> rows, cols;
};

FreeBlock free_block(Index m, Index n, const Pairs& fixed) {
  std::vector<char> rowFixed(static_cast<std::size_t>(m), 0), colFixed(static_cast<std::size_t>(n), 0);
  for (const auto& [i, a] : fixed) {
    if (i < 0 || i >= m || a < 0 || a >= n)
      throw std::invalid_argument("fixed pair out of range");
    if (rowFixed[static_cast<std::size_t>(i)] || colFixed[static_cast<std::size_t>(a)])
      throw std::invalid_argument("fixed pairs must use distinct rows and columns");
    rowFixed[static_cast<std::size_t>(i)] = colFixed[static_cast<std::size_t>(a)] = 1;
  }
  FreeBlock fb;
  for (Index i = 0; i < m; ++i)
    if (!rowFixed[static_cast<std::size_t>(i)]) fb.rows.push_back(i);
  for (Index a = 0; a < n; ++a)
    if (!colFixed[static_cast<std::size_t>(a)]) fb.cols.push_back(a);
  return fb;
}

Matrix gather(const Matrix& M, const FreeBlock& fb) {
  Matrix out(static_cast<Index>(fb.rows.size()), static_cast<Index>(fb.cols.size()));
  for (std::size_t r = 0; r < fb.rows.size(); ++r)
    for (std::size_t c = 0; c < fb.cols.size(); ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = M(fb.rows[r], fb.cols[c]);
  return out;
}

Pairs vertex(const Pairs& fixed, const FreeBlock& fb, const Assignment& sub) {
  Pairs V = fixed;
  for (const auto& [r, c] : sub.pairs)
    V.emplace_back(fb.rows[static_cast<std::size_t>(r)], fb.cols[static_cast<std::size_t>(c)]);
  return V;
}

Matrix to_matrix(Index m, Index n, const Pairs& pairs) {
  Matrix V = Matrix::Zero(m, n);
  for (const auto& [i, a] : pairs) V(i, a) = 1.0;
  return V;
}

// Exact linear minimisation over mass-k partial permutations that contain
// every fixed pair.
Pairs klap_vertex(const Matrix& cost, Index k, const Pairs& fixed, const FreeBlock& fb) {
  const Index rest = k - static_cast<Index>(fixed.size());
  Assignment sub;
  if (rest > 0) sub = solve_klap(gather(cost, fb), rest);
  return vertex(fixed, fb, sub);
}

Pairs substochastic_vertex(const Matrix& cost, const Pairs& fixed, const FreeBlock& fb) {
  Assignment sub;
  if (!fb.rows.empty() && !fb.cols.empty()) sub = solve_substochastic(gather(cost, fb));
  return vertex(fixed, fb, sub);
}

Matrix uniform_start(Index m, Index n, double mass, const Pairs& fixed, const FreeBlock& fb) {
  Matrix P = Matrix::Zero(m, n);
  for (const auto& [i, a] : fixed) P(i, a) = 1.0;
  const double freeMass = mass - static_cast<double>(fixed.size());
  if (!fb.rows.empty() && !fb.cols.empty() && freeMass > 0.0) {
    const double v =
        freeMass / static_cast<double>(fb.rows.size() * fb.cols.size());
    for (Index r : fb.rows)
      for (Index c : fb.cols) P(r, c) = v;
  }
  return P;
}

// Products of the current iterate that the objective, its gradient and the
// step polynomial share. Frank-Wolfe targets are partial permutations, so
// moving towards one only needs row/column gathers; the state is refreshed
// from scratch periodically to keep round-off from accumulating.
struct IterState {
  Matrix P, PB, AP, R, S;  // PB = P B, AP = A P, R = P B P' - A, S = P' A P - B

  void reset(const MatchProblem& prob, const Matrix& X) {
    P = X;
    PB.noalias() = P * prob.attrB;
    AP.noalias() = prob.attrA * P;
    R.noalias() = PB * P.transpose();
    R -= prob.attrA;
    S.noalias() = P.transpose() * AP;
    S -= prob.attrB;
  }

  double value(const MatchProblem& prob, std::optional<double> regK) const {
    double f = prob.lambda1() * prob.D.cwiseProduct(P).sum() +
               prob.lambda2() * (prob.adjA.cwiseProduct(R.cwiseAbs2()).sum() +
                                 prob.adjB.cwiseProduct(S.cwiseAbs2()).sum());
    if (regK) {
      const double gap = P.sum() - *regK;
      f += prob.lambda0() * gap * gap;
    }
    return f;
  }

  Matrix gradient(const MatchProblem& prob, std::optional<double> regK) const {
    Matrix G = prob.lambda1() * prob.D;
    if (prob.lambda2() != 0.0) {
      const Matrix W1 = (4.0 * prob.lambda2()) * R.cwiseProduct(prob.adjA);
      const Matrix W2 = (4.0 * prob.lambda2()) * S.cwiseProduct(prob.adjB);
      G.noalias() += W1 * PB;
      G.noalias() += AP * W2;
    }
    if (regK) G.array() += 2.0 * prob.lambda0() * (P.sum() - *regK);
    return G;
  }
};

struct Step {
  std::array<double, 5> poly{};
  Matrix dB, Ad, R1, R2, S1, S2;
};

// phi(a) = F(P + a (T - P)) for a partial permutation T, expanded from the
// state with gathers only.
Step expand_step(const MatchProblem& prob, const IterState& st, const Pairs& T,
                 std::optional<double> regK) {
  const Matrix& A = prob.attrA;
  const Matrix& B = prob.attrB;
  const Index m = prob.m, n = prob.n;
  Step s;
  Matrix TB = Matrix::Zero(m, n), AT = Matrix::Zero(m, n);
  Matrix X = Matrix::Zero(m, m), Y = Matrix::Zero(n, n);  // X = PB T', Y = P'A T
  Matrix TBT = Matrix::Zero(m, m), TAT = Matrix::Zero(n, n);
  double unaryT = 0.0;
  for (const auto& [i, a] : T) {
    TB.row(i) = B.row(a);
    AT.col(a) = A.col(i);
    X.col(i) = st.PB.col(a);
    Y.col(a) = st.AP.row(i).transpose();
    unaryT += prob.D(i, a);
    for (const auto& [j, b] : T) {
      TBT(i, j) = B(a, b);
      TAT(a, b) = A(i, j);
    }
  }
  s.dB = TB - st.PB;
  s.Ad = AT - st.AP;
  const Matrix PBP = st.R + A;  // P B P'
  const Matrix PAP = st.S + B;  // P' A P
  const Matrix cross1 = X - PBP;
  s.R1 = cross1 + cross1.transpose();
  s.R2 = TBT - X - X.transpose() + PBP;
  const Matrix cross2 = Y - PAP;
  s.S1 = cross2 + cross2.transpose();
  s.S2 = TAT - Y - Y.transpose() + PAP;

  auto wsum = [](const Matrix& E, const Matrix& U, const Matrix& V) {
    return E.cwiseProduct(U).cwiseProduct(V).sum();
  };
  const Matrix& E1 = prob.adjA;
  const Matrix& E2 = prob.adjB;
  const Matrix& R0 = st.R;
  const Matrix& S0 = st.S;
  const double l1 = prob.lambda1(), l2 = prob.lambda2();
  const double unaryP = prob.D.cwiseProduct(st.P).sum();
  auto& c = s.poly;
  c[0] = l1 * unaryP + l2 * (wsum(E1, R0, R0) + wsum(E2, S0, S0));
  c[1] = l1 * (unaryT - unaryP) + l2 * 2.0 * (wsum(E1, R0, s.R1) + wsum(E2, S0, s.S1));
  c[2] = l2 * (wsum(E1, s.R1, s.R1) + 2.0 * wsum(E1, R0, s.R2) + wsum(E2, s.S1, s.S1) +
               2.0 * wsum(E2, S0, s.S2));
  c[3] = l2 * 2.0 * (wsum(E1, s.R1, s.R2) + wsum(E2, s.S1, s.S2));
  c[4] = l2 * (wsum(E1, s.R2, s.R2) + wsum(E2, s.S2, s.S2));
  if (regK) {
    const double mass = st.P.sum();
    const double gap = mass - *regK;
    const double t = static_cast<double>(T.size()) - mass;
    c[0] += prob.lambda0() * gap * gap;
    c[1] += prob.lambda0() * 2.0 * gap * t;
    c[2] += prob.lambda0() * t * t;
  }
  for (double v : c)
    if (!std::isfinite(v)) throw NumericalError("line search: non-finite objective coefficients");
  return s;
}

void advance(IterState& st, const Step& s, const Pairs& T, double alpha) {
  st.P *= 1.0 - alpha;
  for (const auto& [i, a] : T) st.P(i, a) += alpha;
  st.PB += alpha * s.dB;
  st.AP += alpha * s.Ad;
  st.R += alpha * s.R1 + (alpha * alpha) * s.R2;
  st.S += alpha * s.S1 + (alpha * alpha) * s.S2;
}

constexpr int kRefreshEvery = 25;

struct InnerResult {
  int iterations = 0;
};

// One Frank-Wolfe run. Appends accepted objective values to `trace`
// (the starting value included).
InnerResult frank_wolfe_inner(const MatchProblem& prob, Matrix& P, const SolverConfig& cfg,
                              std::optional<double> regK,
                              const std::function<Pairs(const Matrix&)>& lmo,
                              std::vector<double>& trace) {
  IterState st;
  st.reset(prob, P);
  double F = st.value(prob, regK);
  trace.push_back(F);
  InnerResult res;
  for (int t = 0; t < cfg.maxIter; ++t) {
    const Matrix G = st.gradient(prob, regK);
    const Pairs target = lmo(G);
    double gap = G.cwiseProduct(st.P).sum();
    for (const auto& [i, a] : target) gap -= G(i, a);
    if (gap < cfg.tolGap) break;
    const Step step = expand_step(prob, st, target, regK);
    const double alpha = minimize_quartic_unit(step.poly);
    if (alpha <= 0.0) break;
    IterState next = st;
    advance(next, step, target, alpha);
    if ((t + 1) % kRefreshEvery == 0) next.reset(prob, next.P);
    const double Fn = next.value(prob, regK);
    if (!std::isfinite(Fn)) throw NumericalError("frank_wolfe: non-finite objective");
    if (Fn > F) break;  // polynomial model and direct evaluation disagree at round-off level
    st = std::move(next);
    trace.push_back(Fn);
    ++res.iterations;
    const bool small = (F - Fn) < cfg.tolRel * std::abs(F);
    F = Fn;
    if (small) break;
  }
  P = st.P;
  return res;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix initial_point(const MatchProblem& prob, double mass, const SolverConfig& cfg,
                     const FreeBlock& fb) {
  if (cfg.initMode == InitMode::provided) {
    if (cfg.init.rows() != prob.m || cfg.init.cols() != prob.n)
      throw std::invalid_argument("SolverConfig: provided init has wrong shape");
    if (!is_substochastic(cfg.init))
      throw std::invalid_argument("SolverConfig: provided init is not substochastic");
    for (const auto& [i, a] : cfg.fixedPairs)
      if (cfg.init(i, a) != 1.0)
        throw std::invalid_argument("SolverConfig: provided init violates a fixed pair");
    return cfg.init;
  }
  return uniform_start(prob.m, prob.n, mass, cfg.fixedPairs, fb);
}

}  // namespace

Correspondence discretize(const Correspondence& Pcont, Index k, const Pairs& fixedPairs) {
  const Index m = Pcont.rows(), n = Pcont.cols();
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("discretize: k out of range");
  if (static_cast<Index>(fixedPairs.size()) > k)
    throw std::invalid_argument("discretize: more fixed pairs than k");
  const FreeBlock fb = free_block(m, n, fixedPairs);
  return {to_matrix(m, n, klap_vertex(-Pcont.mat, k, fixedPairs, fb)), CorrespondenceKind::binary};
}

SolveReport frank_wolfe_zac(const MatchProblem& prob, Index k, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (k < 1 || k > prob.m) throw std::invalid_argument("frank_wolfe_zac: k must be in [1, m]");
  if (static_cast<Index>(cfg.fixedPairs.size()) > k)
    throw std::invalid_argument("frank_wolfe_zac: more fixed pairs than k");
  const FreeBlock fb = free_block(prob.m, prob.n, cfg.fixedPairs);

  Matrix P = initial_point(prob, static_cast<double>(k), cfg, fb);
  if (cfg.initMode == InitMode::provided && std::abs(P.sum() - static_cast<double>(k)) > 1e-9)
    throw std::invalid_argument("frank_wolfe_zac: provided init must have mass k");

  SolveReport rep;
  rep.segmentStarts.push_back(0);
  const auto inner = frank_wolfe_inner(
      prob, P, cfg, std::nullopt,
      [&](const Matrix& G) { return klap_vertex(G, k, cfg.fixedPairs, fb); }, rep.objectiveTrace);
  rep.iterations = inner.iterations;
  rep.kFinal = k;
  rep.kContinuous = static_cast<double>(k);
  rep.finalContinuous = {P, CorrespondenceKind::continuous};
  rep.finalBinary = discretize(rep.finalContinuous, k, cfg.fixedPairs);
  rep.elapsed = seconds_since(t0);
  return rep;
}

SolveReport frank_wolfe_zacr(const MatchProblem& prob, double k0, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (!(k0 >= 1.0) || k0 > static_cast<double>(prob.m))
    throw std::invalid_argument("frank_wolfe_zacr: k0 must be in [1, m]");
  const FreeBlock fb = free_block(prob.m, prob.n, cfg.fixedPairs);

  Matrix P = initial_point(prob, k0, cfg, fb);
  SolveReport rep;
  double k = k0;
  for (int outer = 0; outer < cfg.maxOuter; ++outer) {
    rep.segmentStarts.push_back(rep.objectiveTrace.size());
    const auto inner = frank_wolfe_inner(
        prob, P, cfg, k,
        [&](const Matrix& G) { return substochastic_vertex(G, cfg.fixedPairs, fb); },
        rep.objectiveTrace);
    rep.iterations += inner.iterations;
    const double next = P.sum();
    const double change = std::abs(next - k);
    k = next;
    if (change < cfg.kChangeTol) break;
  }
  rep.kContinuous = k;
  rep.kFinal = static_cast<Index>(std::llround(k));
  if (rep.kFinal < 1) throw NumericalError("frank_wolfe_zacr: matching collapsed to k = 0");
  rep.kFinal = std::min(rep.kFinal, prob.m);
  rep.kFinal = std::max(rep.kFinal, static_cast<Index>(cfg.fixedPairs.size()));
  rep.finalContinuous = {P, CorrespondenceKind::continuous};
  rep.finalBinary = discretize(rep.finalContinuous, rep.kFinal, cfg.fixedPairs);
  rep.elapsed = seconds_since(t0);
  return rep;
}

}  // namespace zac
