#include "cli.hpp"

#include "zacgm/bench.hpp"
#include "zacgm/deformable.hpp"
#include "zacgm/io.hpp"
#include "zacgm/outliers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace zac::cli {

namespace {

const std::vector<std::string> kSuites = {"rotation-sweep", "outlier-sweep-rigid",
                                          "outlier-sweep-nonrigid", "removal-precision",
                                          "condition-verify"};

std::string verb_name(Verb v) {
  switch (v) {
    case Verb::match: return "match";
    case Verb::dgm: return "dgm";
    case Verb::bench: return "bench";
    case Verb::verify: return "verify";
  }
  return "?";
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ZAC_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
  }
  return 42;
}

std::vector<std::string> Command::canonical() const {
  std::vector<std::string> args{verb_name(verb)};
  auto add = [&](const std::string& flag, const std::string& value) {
    args.push_back(flag);
    args.push_back(value);
  };
  if (!a.empty()) add("--a", a);
  if (!b.empty()) add("--b", b);
  if (!gt.empty()) add("--gt", gt);
  if (!out.empty()) add("--out", out);
  if (k) add("--k", std::to_string(*k));
  if (ratio) add("--ratio", num(*ratio));
  if (lambda0) add("--lambda0", num(*lambda0));
  if (lambda1) add("--lambda1", num(*lambda1));
  if (lambda2) add("--lambda2", num(*lambda2));
  if (beta) add("--beta", num(*beta));
  if (lambdaR) add("--lambdaR", num(*lambdaR));
  if (verb == Verb::match || verb == Verb::dgm) {
    add("--method", method);
    add("--removal", removal ? "on" : "off");
  }
  if (verb == Verb::dgm) add("--mode", mode);
  if (verb == Verb::bench) add("--suite", suite);
  add("--seed", std::to_string(seed));
  if (trials) add("--trials", std::to_string(*trials));
  if (verb == Verb::verify) add("--max-disturb", std::to_string(maxDisturb));
  if (timing) args.push_back("--timing");
  return args;
}

Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Outlier-robust graph matching", "zacgm"};
  app.require_subcommand(1, 1);
  app.set_help_flag();

  Command cmd;
  cmd.seed = default_seed();
  std::optional<long> k;
  std::optional<double> ratio, l0, l1, l2, beta, lambdaR;
  std::optional<int> trials;
  std::string removal = "on";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cmd.seed, "Master seed (default $ZAC_SEED or 42)");
    sub->add_option("--out", cmd.out, "Output file (default stdout)");
    sub->add_flag("--timing", cmd.timing, "Record wall-clock timings in outputs");
  };
  auto problem = [&](CLI::App* sub, bool requireInputs) {
    auto* oa = sub->add_option("--a", cmd.a, "PointSet JSON for graph A");
    auto* ob = sub->add_option("--b", cmd.b, "PointSet JSON for graph B");
    if (requireInputs) {
      oa->required();
      ob->required();
    }
    sub->add_option("--gt", cmd.gt, "Ground-truth pairs JSON");
    sub->add_option("--lambda0", l0)->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda1", l1)->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda2", l2)->check(CLI::NonNegativeNumber);
  };
  auto matching = [&](CLI::App* sub) {
    auto* ok = sub->add_option("--k", k, "Number of matches")
                   ->check(CLI::Range(1L, std::numeric_limits<long>::max())
                               .description("k must be >= 1"));
    auto* orr = sub->add_option("--ratio", ratio, "k = floor(ratio * min(m, n))")
                    ->check(CLI::Range(0.0, 1.0));
    ok->excludes(orr);
    sub->add_option("--method", cmd.method)->check(CLI::IsMember({"zac", "zacr"}));
    sub->add_option("--removal", removal)->check(CLI::IsMember({"on", "off"}));
    return std::make_pair(ok, orr);
  };

  auto* match = app.add_subcommand("match", "Match two point sets");
  problem(match, true);
  auto [mk, mr] = matching(match);
  common(match);

  auto* dgm = app.add_subcommand("dgm", "Deformable matching with transform estimation");
  problem(dgm, true);
  matching(dgm);
  dgm->add_option("--mode", cmd.mode)->check(CLI::IsMember({"rigid", "nonrigid"}));
  dgm->add_option("--beta", beta)->check(CLI::PositiveNumber);
  dgm->add_option("--lambdaR", lambdaR)->check(CLI::PositiveNumber);
  common(dgm);

  auto* bench = app.add_subcommand("bench", "Run a synthetic experiment suite");
  bench->add_option("--suite", cmd.suite)->required()->check(CLI::IsMember(kSuites));
  bench->add_option("--trials", trials)->check(CLI::PositiveNumber);
  common(bench);

  auto* verify = app.add_subcommand("verify", "Disturbed-optimum curve on one instance");
  problem(verify, false);
  verify->add_option("--max-disturb", cmd.maxDisturb)->check(CLI::NonNegativeNumber);
  verify->add_option("--trials", trials)->check(CLI::PositiveNumber);
  common(verify);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (match->parsed()) {
    cmd.verb = Verb::match;
    if (!k && !ratio) throw UsageError("match: one of --k or --ratio is required");
  } else if (dgm->parsed()) {
    cmd.verb = Verb::dgm;
  } else if (bench->parsed()) {
    cmd.verb = Verb::bench;
  } else {
    cmd.verb = Verb::verify;
    const int given = !cmd.a.empty() + !cmd.b.empty() + !cmd.gt.empty();
    if (given != 0 && given != 3)
      throw UsageError("verify: --a, --b and --gt must be given together");
  }
  (void)mk;
  (void)mr;
  cmd.k = k;
  cmd.ratio = ratio;
  cmd.lambda0 = l0;
  cmd.lambda1 = l1;
  cmd.lambda2 = l2;
  cmd.beta = beta;
  cmd.lambdaR = lambdaR;
  cmd.trials = trials;
  cmd.removal = removal == "on";
  return cmd;
}

namespace {

void emit(const Command& cmd, const std::string& content, std::ostream& out) {
  if (cmd.out.empty())
    out << content;
  else
    write_file_atomic(cmd.out, content);
}

Weights apply_weights(const Command& cmd, Weights w) {
  if (cmd.lambda0) w.lambda0 = *cmd.lambda0;
  if (cmd.lambda1) w.lambda1 = *cmd.lambda1;
  if (cmd.lambda2) w.lambda2 = *cmd.lambda2;
  return w;
}

Index resolve_k(const Command& cmd, Index m, Index n, Index fallback) {
  Index k = fallback;
  if (cmd.k) k = *cmd.k;
  if (cmd.ratio)
    k = static_cast<Index>(std::floor(*cmd.ratio * static_cast<double>(std::min(m, n))));
  if (k < 1) throw std::runtime_error("k resolves to " + std::to_string(k) + "; need k >= 1");
  if (k > std::min(m, n))
    throw std::runtime_error("k = " + std::to_string(k) + " exceeds min(m, n) = " +
                             std::to_string(std::min(m, n)));
  return k;
}

RemovalConfig removal_config(const Command& cmd) {
  RemovalConfig rc;
  rc.method = cmd.method == "zacr" ? Method::zacr : Method::zac;
  rc.removal = cmd.removal;
  return rc;
}

}  // namespace

ProblemConfig problem_config(const Command& cmd) {
  ProblemConfig pcfg;
  pcfg.weights = apply_weights(cmd, pcfg.weights);
  return pcfg;
}

namespace {

int run_match(const Command& cmd, std::ostream& out) {
  const PointSet A = read_point_set(cmd.a);
  const PointSet B = read_point_set(cmd.b);
  const ProblemConfig pcfg = problem_config(cmd);
  const Index k = resolve_k(cmd, A.size(), B.size(), 0);
  const RemovalReport rep = match_with_removal(A, B, pcfg, k, removal_config(cmd));
  std::optional<MatchMetrics> quality;
  if (!cmd.gt.empty())
    quality = metrics(rep.solve.finalBinary, read_ground_truth(cmd.gt, A.size(), B.size()));
  emit(cmd, solve_report_json(rep, k, cmd.timing, quality), out);
  return 0;
}

int run_dgm(const Command& cmd, std::ostream& out) {
  const PointSet A = read_point_set(cmd.a);
  const PointSet B = read_point_set(cmd.b);
  DgmConfig cfg;
  cfg.weights = apply_weights(cmd, cfg.weights);
  cfg.removal = removal_config(cmd);
  if (cmd.beta) cfg.beta = *cmd.beta;
  if (cmd.lambdaR) cfg.lambdaR = *cmd.lambdaR;
  const Index k = resolve_k(cmd, A.size(), B.size(), std::min(A.size(), B.size()) / 2);
  const DeformMode mode = cmd.mode == "nonrigid" ? DeformMode::nonrigid : DeformMode::rigid;
  const DgmResult res = dgm_solve(A, B, k, mode, cfg);
  std::optional<MatchMetrics> quality;
  std::optional<double> err;
  if (!cmd.gt.empty()) {
    const InlierPartition gt = read_ground_truth(cmd.gt, A.size(), B.size());
    quality = metrics(res.match.solve.finalBinary, gt);
    err = transform_error(res.transform, A, gt, B);
  }
  emit(cmd, dgm_report_json(res, k, cmd.timing, quality, err), out);
  return 0;
}

int run_bench(const Command& cmd, std::ostream& out) {
  ExperimentSpec spec;
  spec.name = cmd.suite;
  spec.seed = cmd.seed;
  spec.timing = cmd.timing;
  if (cmd.trials) spec.trials = *cmd.trials;
  const auto rows = run_experiment(spec);
  const bool json = cmd.out.size() >= 5 && cmd.out.substr(cmd.out.size() - 5) == ".json";
  emit(cmd, json ? report_json(rows) : report_csv(rows), out);
  if (!cmd.out.empty()) {
    for (const auto& s : summarize(rows)) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-32s %-20s mean %.6g  sd %.6g  n %d\n", s.configId.c_str(),
                    s.metric.c_str(), s.mean, s.stddev, s.count);
      out << buf;
    }
  }
  return 0;
}

int run_verify(const Command& cmd, std::ostream& out) {
  SynthInstance inst;
  if (!cmd.a.empty()) {
    inst.ptsA = read_point_set(cmd.a);
    inst.ptsB = read_point_set(cmd.b);
    inst.gt = read_ground_truth(cmd.gt, inst.ptsA.size(), inst.ptsB.size());
  } else {
    inst = gen_separated_instance(20, 10, cmd.seed);
  }
  const ProblemConfig pcfg = problem_config(cmd);
  const ConditionCurves curves =
      verify_condition(inst, cmd.maxDisturb, cmd.trials.value_or(5), cmd.seed, pcfg);
  std::ostringstream csv;
  csv << "disturbed,min_objective\n";
  char buf[64];
  for (std::size_t d = 0; d < curves.mean.size(); ++d) {
    std::snprintf(buf, sizeof buf, "%.10g", curves.mean[d]);
    csv << d << ',' << buf << '\n';
  }
  emit(cmd, csv.str(), out);
  return 0;
}

}  // namespace

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    switch (cmd.verb) {
      case Verb::match: return run_match(cmd, out);
      case Verb::dgm: return run_dgm(cmd, out);
      case Verb::bench: return run_bench(cmd, out);
      case Verb::verify: return run_verify(cmd, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n'
        << "usage: zacgm {match|dgm|bench|verify} [options]\n";
    return 1;
  }
  return execute(cmd, out, err);
}

}  // namespace zac::cli
