#include "zacgm/bench.hpp"

#include "zacgm/objective.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace zac {

TemplateKind parse_template(const std::string& name) {
  if (name == "circle") return TemplateKind::circle;
  if (name == "spiral") return TemplateKind::spiral;
  if (name == "grid") return TemplateKind::grid;
  if (name == "file") return TemplateKind::file;
  throw std::invalid_argument("unknown template '" + name + "'");
}

std::string to_string(TemplateKind t) {
  switch (t) {
    case TemplateKind::circle: return "circle";
    case TemplateKind::spiral: return "spiral";
    case TemplateKind::grid: return "grid";
    case TemplateKind::file: return "file";
  }
  return "?";
}

void SynthConfig::validate() const {
  if (inlierCount < 1) throw std::invalid_argument("SynthConfig: inlierCount must be >= 1");
  if (outlierCountA < 0 || outlierCountB < 0)
    throw std::invalid_argument("SynthConfig: outlier counts must be >= 0");
  if (noiseLevel < 0.0 || outlierStd < 0.0)
    throw std::invalid_argument("SynthConfig: noise levels must be >= 0");
  if (!(scale > 0.0)) throw std::invalid_argument("SynthConfig: scale must be positive");
  if (!(nonrigidBeta > 0.0)) throw std::invalid_argument("SynthConfig: nonrigidBeta must be positive");
}

namespace {

Matrix read_template_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("template file not readable: " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y) || !std::isfinite(x) || !std::isfinite(y))
      throw std::runtime_error("template file " + path + ": bad row at line " +
                               std::to_string(lineNo));
    rows.emplace_back(x, y);
  }
  Matrix pts(static_cast<Index>(rows.size()), 2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    pts(static_cast<Index>(r), 0) = rows[r].first;
    pts(static_cast<Index>(r), 1) = rows[r].second;
  }
  return pts;
}

Matrix rotation2d(double angle) {
  // Row-vector convention: [x y] * R rotates counter-clockwise by angle.
  Matrix R(2, 2);
  R << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
  return R;
}

std::vector<Index> shuffled(Index n, std::mt19937_64& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

Matrix template_points(const SynthConfig& cfg) {
  const Index T = 2 * cfg.inlierCount;
  const double pi = std::numbers::pi;
  switch (cfg.shape) {
    case TemplateKind::circle: {
      Matrix pts(T, 2);
      for (Index j = 0; j < T; ++j) {
        const double th = 2.0 * pi * static_cast<double>(j) / static_cast<double>(T);
        pts.row(j) << std::cos(th), std::sin(th);
      }
      return pts;
    }
    case TemplateKind::spiral: {
      // Archimedean spiral over 1.75 turns, outer radius 1, centred on its mean.
      Matrix pts(T, 2);
      const double th0 = 0.5 * pi, th1 = 4.0 * pi;
      for (Index j = 0; j < T; ++j) {
        const double th = th0 + (th1 - th0) * static_cast<double>(j) / static_cast<double>(T - 1 > 0 ? T - 1 : 1);
        const double r = th / th1;
        pts.row(j) << r * std::cos(th), r * std::sin(th);
      }
      const RowVector mean = pts.colwise().mean();
      pts.rowwise() -= mean;
      return pts;
    }
    case TemplateKind::grid: {
      const auto side = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(T))));
      Matrix pts(side * side, 2);
      for (Index r = 0; r < side; ++r)
        for (Index c = 0; c < side; ++c) {
          const double step = side > 1 ? 2.0 / static_cast<double>(side - 1) : 0.0;
          pts.row(r * side + c) << -1.0 + step * static_cast<double>(c),
              -1.0 + step * static_cast<double>(r);
        }
      return pts;
    }
    case TemplateKind::file: {
      Matrix pts = read_template_csv(cfg.templateFile);
      if (pts.rows() < cfg.inlierCount)
        throw std::runtime_error("template file has fewer points than inlierCount");
      return pts;
    }
  }
  throw std::invalid_argument("template_points: unknown template");
}

SynthInstance gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> noise(0.0, cfg.noiseLevel);
  std::normal_distribution<double> outlier(0.0, cfg.outlierStd);

  const Matrix tmpl = template_points(cfg);
  if (tmpl.rows() < cfg.inlierCount)
    throw std::runtime_error("template has fewer points than inlierCount");
  std::vector<Index> pick = shuffled(tmpl.rows(), rng);
  pick.resize(static_cast<std::size_t>(cfg.inlierCount));
  std::sort(pick.begin(), pick.end());
  const Index N = cfg.inlierCount;
  Matrix inl(N, 2);
  for (Index r = 0; r < N; ++r) inl.row(r) = tmpl.row(pick[static_cast<std::size_t>(r)]);

  Matrix defB = inl;
  switch (cfg.deform) {
    case DeformKind::none: break;
    case DeformKind::rotation: defB = inl * rotation2d(cfg.angle); break;
    case DeformKind::rigid:
      defB = (cfg.scale * inl * rotation2d(cfg.angle)).rowwise() + cfg.translation.transpose();
      break;
    case DeformKind::nonrigid: {
      std::normal_distribution<double> wdist(0.0, cfg.nonrigidWeightStd);
      Matrix W(N, 2);
      for (Index r = 0; r < N; ++r)
        for (Index c = 0; c < 2; ++c) W(r, c) = wdist(rng);
      defB = inl + gaussian_kernel(inl, inl, cfg.nonrigidBeta) * W / static_cast<double>(N);
      break;
    }
  }

  auto noisy = [&](const Matrix& base) {
    Matrix out = base;
    for (Index r = 0; r < out.rows(); ++r)
      for (Index c = 0; c < out.cols(); ++c) out(r, c) += noise(rng);
    return out;
  };
  const Matrix inA = noisy(inl);
  const Matrix inB = noisy(defB);
  auto with_outliers = [&](const Matrix& in, Index count) {
    Matrix out(in.rows() + count, 2);
    out.topRows(in.rows()) = in;
    for (Index r = 0; r < count; ++r)
      for (Index c = 0; c < 2; ++c) out(in.rows() + r, c) = outlier(rng);
    return out;
  };
  const Matrix rawA = with_outliers(inA, cfg.outlierCountA);
  const Matrix rawB = with_outliers(inB, cfg.outlierCountB);

  // permA[newIndex] = oldIndex
  const std::vector<Index> permA = shuffled(rawA.rows(), rng);
  const std::vector<Index> permB = shuffled(rawB.rows(), rng);
  std::vector<Index> newOfOldB(permB.size());
  Matrix A(rawA.rows(), 2), B(rawB.rows(), 2);
  for (std::size_t r = 0; r < permA.size(); ++r) A.row(static_cast<Index>(r)) = rawA.row(permA[r]);
  for (std::size_t r = 0; r < permB.size(); ++r) {
    B.row(static_cast<Index>(r)) = rawB.row(permB[r]);
    newOfOldB[static_cast<std::size_t>(permB[r])] = static_cast<Index>(r);
  }

  std::vector<std::pair<Index, Index>> pairs;
  for (std::size_t r = 0; r < permA.size(); ++r)
    if (permA[r] < N) pairs.emplace_back(static_cast<Index>(r), newOfOldB[static_cast<std::size_t>(permA[r])]);

  SynthInstance inst;
  inst.ptsA = PointSet(std::move(A));
  inst.ptsB = PointSet(std::move(B));
  inst.gt = InlierPartition::from_pairs(inst.ptsA.size(), inst.ptsB.size(), pairs);
  return inst;
}

SynthInstance gen_separated_instance(Index inliers, Index outliersPerSide, std::uint64_t seed) {
  if (inliers < 2) throw std::invalid_argument("gen_separated_instance: need >= 2 inliers");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> noise(0.0, 0.01);

  // Inliers inside the unit disk; outliers on a circle of radius R with
  // at least 3 inlier-diameters between neighbours, well clear of the disk.
  Matrix inl(inliers, 2);
  for (Index r = 0; r < inliers;) {
    const double x = unit(rng), y = unit(rng);
    if (x * x + y * y <= 1.0) inl.row(r++) << x, y;
  }
  const double pi = std::numbers::pi;
  const double radius = std::max(20.0, 3.0 * static_cast<double>(outliersPerSide));
  auto ring = [&](Index count) {
    Matrix out(count, 2);
    const double off = 2.0 * pi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (Index r = 0; r < count; ++r) {
      const double th = off + 2.0 * pi * static_cast<double>(r) / static_cast<double>(count);
      out.row(r) << radius * std::cos(th), radius * std::sin(th);
    }
    return out;
  };
  Matrix A(inliers + outliersPerSide, 2), B(inliers + outliersPerSide, 2);
  for (Index r = 0; r < inliers; ++r) {
    A.row(r) = inl.row(r) + RowVector::NullaryExpr(2, [&] { return noise(rng); });
    B.row(r) = inl.row(r) + RowVector::NullaryExpr(2, [&] { return noise(rng); });
  }
  if (outliersPerSide > 0) {
    A.bottomRows(outliersPerSide) = ring(outliersPerSide);
    B.bottomRows(outliersPerSide) = ring(outliersPerSide);
  }
  const std::vector<Index> permB = shuffled(B.rows(), rng);
  std::vector<Index> newOfOld(permB.size());
  Matrix Bs(B.rows(), 2);
  for (std::size_t r = 0; r < permB.size(); ++r) {
    Bs.row(static_cast<Index>(r)) = B.row(permB[r]);
    newOfOld[static_cast<std::size_t>(permB[r])] = static_cast<Index>(r);
  }
  std::vector<std::pair<Index, Index>> pairs;
  for (Index r = 0; r < inliers; ++r) pairs.emplace_back(r, newOfOld[static_cast<std::size_t>(r)]);
  SynthInstance inst;
  inst.ptsA = PointSet(std::move(A));
  inst.ptsB = PointSet(std::move(Bs));
  inst.gt = InlierPartition::from_pairs(inst.ptsA.size(), inst.ptsB.size(), pairs);
  return inst;
}

InlierPartition to_problem(const MatchProblem& prob, const InlierPartition& gt) {
  if (!prob.swapped) return gt;
  InlierPartition out;
  out.inliersA = gt.inliersB;
  out.outliersA = gt.outliersB;
  out.inliersB = gt.inliersA;
  out.outliersB = gt.outliersA;
  for (const auto& [i, a] : gt.tau) out.tau[a] = i;
  return out;
}

PremiseReport evaluate_premises(const MatchProblem& prob, const InlierPartition& gt) {
  PremiseReport rep;
  const Index m = prob.m, n = prob.n;
  std::vector<char> inA(static_cast<std::size_t>(m), 0), inB(static_cast<std::size_t>(n), 0);
  for (Index i : gt.inliersA) inA[static_cast<std::size_t>(i)] = 1;
  for (Index a : gt.inliersB) inB[static_cast<std::size_t>(a)] = 1;

  Index good = 0;
  double worstTrue = 0.0;
  for (const auto& [i, a] : gt.tau) {
    Index best = 0;
    prob.D.row(i).minCoeff(&best);
    if (best == a) ++good;
    worstTrue = std::max(worstTrue, prob.D(i, a));
  }
  rep.unaryConsistency = gt.tau.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(gt.tau.size());

  Index outlierPairs = 0, distinct = 0;
  for (Index i = 0; i < m; ++i)
    for (Index a = 0; a < n; ++a) {
      if (inA[static_cast<std::size_t>(i)] && inB[static_cast<std::size_t>(a)]) continue;
      ++outlierPairs;
      if (prob.D(i, a) >= worstTrue) ++distinct;
    }
  rep.unaryDistinguishability =
      outlierPairs == 0 ? 1.0 : static_cast<double>(distinct) / static_cast<double>(outlierPairs);

  // Smallest inlier-inlier value must dominate every edge touching an outlier.
  auto side_ok = [](const Matrix& M, const std::vector<char>& in, bool absolute) {
    double minIn = std::numeric_limits<double>::infinity();
    double maxOut = 0.0;
    for (Index i = 0; i < M.rows(); ++i)
      for (Index j = 0; j < M.cols(); ++j) {
        if (i == j) continue;
        const double v = absolute ? std::abs(M(i, j)) : M(i, j);
        if (in[static_cast<std::size_t>(i)] && in[static_cast<std::size_t>(j)])
          minIn = std::min(minIn, v);
        else
          maxOut = std::max(maxOut, v);
      }
    return minIn >= maxOut;
  };
  rep.adjacencyPremise = side_ok(prob.adjA, inA, false) && side_ok(prob.adjB, inB, false);
  rep.attributePremise = side_ok(prob.attrA, inA, true) && side_ok(prob.attrB, inB, true);
  return rep;
}

std::vector<std::pair<Index, Index>> disturbed_pairs(const InlierPartition& gt,
                                                     const std::vector<Index>& order, Index d) {
  const auto count = static_cast<Index>(order.size());
  if (d < 0 || d > count) throw std::invalid_argument("disturbed_pairs: d exceeds inlier count");
  if (d == 0) return {};
  const Index cycle = d < count ? d + 1 : d;
  if (cycle < 2) throw std::invalid_argument("disturbed_pairs: need at least 2 inliers");
  std::vector<std::pair<Index, Index>> pairs;
  for (Index j = 0; j < d; ++j) {
    const Index i = order[static_cast<std::size_t>(j)];
    const Index next = order[static_cast<std::size_t>((j + 1) % cycle)];
    pairs.emplace_back(i, gt.tau.at(next));
  }
  return pairs;
}

ConditionCurves verify_condition(const SynthInstance& inst, Index maxDisturb, int trials,
                                 std::uint64_t seed, const ProblemConfig& pcfg,
                                 const SolverConfig& scfg) {
  const auto inlierCount = static_cast<Index>(inst.gt.tau.size());
  if (maxDisturb < 0 || maxDisturb > inlierCount)
    throw std::invalid_argument("verify_condition: maxDisturb exceeds inlier count");
  if (trials < 1) throw std::invalid_argument("verify_condition: trials must be >= 1");

  const MatchProblem prob = build_problem(inst.ptsA, inst.ptsB, pcfg);
  const InlierPartition gt = to_problem(prob, inst.gt);
  const Index k = inlierCount;
  Matrix Pstar = Matrix::Zero(prob.m, prob.n);
  for (const auto& [i, a] : gt.tau) Pstar(i, a) = 1.0;

  ConditionCurves curves;
  curves.mean.assign(static_cast<std::size_t>(maxDisturb + 1), 0.0);
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, 0, static_cast<std::uint64_t>(t)));
    std::vector<Index> order = gt.inliersA;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> curve;
    for (Index d = 0; d <= maxDisturb; ++d) {
      SolverConfig cfg = scfg;
      if (d == 0) {
        cfg.initMode = InitMode::provided;
        cfg.init = Pstar;
        cfg.fixedPairs.clear();
      } else {
        cfg.initMode = InitMode::uniform;
        cfg.fixedPairs = disturbed_pairs(gt, order, d);
      }
      const SolveReport rep = frank_wolfe_zac(prob, k, cfg);
      curve.push_back(objective(prob, rep.finalBinary.mat).total);
    }
    for (std::size_t d = 0; d < curve.size(); ++d) curves.mean[d] += curve[d] / trials;
    curves.trials.push_back(std::move(curve));
  }
  return curves;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t configIndex, std::uint64_t trial) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ configIndex) ^ trial);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Runner {
  const ExperimentSpec& spec;
  std::vector<ReportRow> rows;

  void emit(const std::string& cfgId, int trial, std::uint64_t seed, const std::string& metric,
            double value, double ms) {
    rows.push_back({spec.name, cfgId, trial, seed, metric, value, spec.timing ? ms : 0.0});
  }
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> default_grid(const ExperimentSpec& spec, std::vector<double> fallback) {
  return spec.grid.empty() ? fallback : spec.grid;
}

std::vector<TemplateKind> templates_or(const ExperimentSpec& spec, std::vector<TemplateKind> t) {
  return spec.templates.empty() ? t : spec.templates;
}

Index dgm_k(const SynthInstance& inst) {
  return std::max<Index>(1, std::min(inst.ptsA.size(), inst.ptsB.size()) / 2);
}

void run_dgm_sweep(Runner& run, DeformMode mode, bool rotationSweep) {
  const ExperimentSpec& spec = run.spec;
  const double pi = std::numbers::pi;
  std::vector<double> grid;
  if (rotationSweep) {
    std::vector<double> angles;
    for (int j = 0; j < 16; ++j) angles.push_back(-pi + 2.0 * pi * j / 15.0);
    grid = default_grid(spec, angles);
  } else {
    grid = default_grid(spec, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  }
  const auto templates = templates_or(spec, {TemplateKind::circle, TemplateKind::spiral});
  const int trials = spec.trials > 0 ? spec.trials : (rotationSweep ? 5 : 20);
  const Index inliers = spec.inlierCount > 0 ? spec.inlierCount : 50;
  DgmConfig dcfg = spec.dgm;
  dcfg.removal.solver = spec.solver;

  std::uint64_t cfgIndex = 0;
  for (TemplateKind tk : templates) {
    for (double g : grid) {
      const std::string cfgId = "template=" + to_string(tk) +
                                (rotationSweep ? ";angle=" : ";ratio=") + fmt_double(g);
      for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = derive_seed(spec.seed, cfgIndex, static_cast<std::uint64_t>(t));
        std::mt19937_64 rng(seed);
        SynthConfig sc;
        sc.shape = tk;
        sc.inlierCount = inliers;
        sc.noiseLevel = spec.noiseLevel;
        sc.seed = rng();
        if (rotationSweep) {
          std::uniform_int_distribution<Index> count(10, 50);
          sc.outlierCountA = count(rng);
          sc.outlierCountB = count(rng);
          sc.deform = DeformKind::rotation;
          sc.angle = g;
        } else {
          sc.outlierCountA = sc.outlierCountB =
              static_cast<Index>(std::llround(g * static_cast<double>(inliers)));
          if (mode == DeformMode::rigid) {
            sc.deform = DeformKind::rotation;
            sc.angle = std::uniform_real_distribution<double>(-0.1 * pi, 0.1 * pi)(rng);
          } else {
            sc.deform = DeformKind::nonrigid;
          }
        }
        const SynthInstance inst = gen_synthetic(sc);
        const auto t0 = std::chrono::steady_clock::now();
        const DgmResult res = dgm_solve(inst.ptsA, inst.ptsB, dgm_k(inst), mode, dcfg);
        const double ms = ms_since(t0);
        const double err = transform_error(res.transform, inst.ptsA, inst.gt, inst.ptsB);
        const MatchMetrics mm = metrics(res.match.solve.finalBinary, inst.gt);
        if (spec.observer) spec.observer(cfgId, t, inst, res.match);
        run.emit(cfgId, t, seed, "avg_error", err, ms);
        run.emit(cfgId, t, seed, "precision", mm.precision, ms);
        run.emit(cfgId, t, seed, "recall", mm.recall, ms);
      }
      ++cfgIndex;
    }
  }
}

void run_removal_precision(Runner& run) {
  const ExperimentSpec& spec = run.spec;
  const auto grid = default_grid(spec, {1.0});
  const auto templates = templates_or(spec, {TemplateKind::circle, TemplateKind::spiral});
  const int trials = spec.trials > 0 ? spec.trials : 15;
  const Index inliers = spec.inlierCount > 0 ? spec.inlierCount : 20;
  const Index outliers = 20;

  std::uint64_t cfgIndex = 0;
  for (TemplateKind tk : templates) {
    for (double ratio : grid) {
      const std::string cfgId = "template=" + to_string(tk) + ";ratio=" + fmt_double(ratio);
      for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = derive_seed(spec.seed, cfgIndex, static_cast<std::uint64_t>(t));
        SynthConfig sc;
        sc.shape = tk;
        sc.inlierCount = inliers;
        sc.outlierCountA = sc.outlierCountB = outliers;
        sc.noiseLevel = spec.noiseLevel;
        sc.seed = seed;
        const SynthInstance inst = gen_synthetic(sc);
        ProblemConfig pcfg{spec.dgm.shape, spec.dgm.weights};
        const Index k = std::max<Index>(
            1, static_cast<Index>(std::floor(ratio * static_cast<double>(
                                                 std::min(inst.ptsA.size(), inst.ptsB.size())))));

        RemovalConfig plain;
        plain.method = Method::zac;
        plain.solver = spec.solver;
        plain.removal = false;
        auto t0 = std::chrono::steady_clock::now();
        const RemovalReport base = match_with_removal(inst.ptsA, inst.ptsB, pcfg, k, plain);
        const double msPlain = ms_since(t0);

        RemovalConfig loop = spec.dgm.removal;
        loop.method = Method::zacr;  // with k = min(m, n) a fixed-k loop cannot drop any node
        loop.solver = spec.solver;
        loop.removal = true;
        t0 = std::chrono::steady_clock::now();
        const RemovalReport refined = match_with_removal(inst.ptsA, inst.ptsB, pcfg, k, loop);
        const double msLoop = ms_since(t0);

        if (spec.observer) {
          spec.observer(cfgId, t, inst, base);
          spec.observer(cfgId, t, inst, refined);
        }
        const MatchMetrics mb = metrics(base.solve.finalBinary, inst.gt);
        const MatchMetrics mr = metrics(refined.solve.finalBinary, inst.gt);
        run.emit(cfgId, t, seed, "precision_plain", mb.precision, msPlain);
        run.emit(cfgId, t, seed, "recall_plain", mb.recall, msPlain);
        run.emit(cfgId, t, seed, "f_plain", mb.f_measure, msPlain);
        run.emit(cfgId, t, seed, "precision_removal", mr.precision, msLoop);
        run.emit(cfgId, t, seed, "recall_removal", mr.recall, msLoop);
        run.emit(cfgId, t, seed, "f_removal", mr.f_measure, msLoop);
      }
      ++cfgIndex;
    }
  }
}

void run_condition_verify(Runner& run) {
  const ExperimentSpec& spec = run.spec;
  const int trials = spec.trials > 0 ? spec.trials : 30;
  const Index inliers = spec.inlierCount > 0 ? spec.inlierCount : 20;
  const Index maxDisturb = spec.grid.empty() ? 10 : static_cast<Index>(spec.grid.front());
  const Index outliers = 10;
  ProblemConfig pcfg{spec.dgm.shape, spec.dgm.weights};
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(spec.seed, 0, static_cast<std::uint64_t>(t));
    const SynthInstance inst = gen_separated_instance(inliers, outliers, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const ConditionCurves c = verify_condition(inst, maxDisturb, 1, seed, pcfg, spec.solver);
    const double ms = ms_since(t0);
    for (std::size_t d = 0; d < c.mean.size(); ++d)
      run.emit("d=" + std::to_string(d), t, seed, "min_objective", c.mean[d], ms);
  }
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  Runner run{spec, {}};
  if (spec.name == "rotation-sweep")
    run_dgm_sweep(run, DeformMode::rigid, true);
  else if (spec.name == "outlier-sweep-rigid")
    run_dgm_sweep(run, DeformMode::rigid, false);
  else if (spec.name == "outlier-sweep-nonrigid")
    run_dgm_sweep(run, DeformMode::nonrigid, false);
  else if (spec.name == "removal-precision")
    run_removal_precision(run);
  else if (spec.name == "condition-verify")
    run_condition_verify(run);
  else
    throw std::invalid_argument("unknown experiment '" + spec.name + "'");
  return std::move(run.rows);
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "experiment,config-id,trial,seed,metric-name,value,elapsed-ms\n";
  for (const auto& r : rows) {
    out += r.experiment + ',' + r.configId + ',' + std::to_string(r.trial) + ',' +
           std::to_string(r.seed) + ',' + r.metric + ',' + fmt_double(r.value) + ',' +
           fmt_double(r.elapsedMs) + '\n';
  }
  return out;
}

std::string report_json(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"experiment", r.experiment},
                   {"config-id", r.configId},
                   {"trial", r.trial},
                   {"seed", r.seed},
                   {"metric-name", r.metric},
                   {"value", r.value},
                   {"elapsed-ms", r.elapsedMs}});
  }
  return arr.dump(2) + "\n";
}

std::vector<MetricSummary> summarize(const std::vector<ReportRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.configId, r.metric);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.value);
  }
  std::vector<MetricSummary> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    MetricSummary s{key.first, key.second, 0.0, 0.0, static_cast<int>(v.size())};
    for (double x : v) s.mean += x / static_cast<double>(v.size());
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean) / static_cast<double>(v.size());
    s.stddev = std::sqrt(s.stddev);
    out.push_back(s);
  }
  return out;
}

}  // namespace zac
