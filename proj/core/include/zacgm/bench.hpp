#pragma once

#include "zacgm/core.hpp"
#include "zacgm/deformable.hpp"
#include "zacgm/outliers.hpp"
#include "zacgm/problem.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zac {

enum class TemplateKind { circle, spiral, grid, file };
enum class DeformKind { none, rotation, rigid, nonrigid };

TemplateKind parse_template(const std::string& name);
std::string to_string(TemplateKind t);

struct SynthConfig {
  TemplateKind shape = TemplateKind::circle;
  std::string templateFile;  // CSV "x,y" rows, used when shape == file
  Index inlierCount = 50;    // drawn without replacement from a template twice as dense
  Index outlierCountA = 0;
  Index outlierCountB = 0;
  double noiseLevel = 0.01;  // per-coordinate U(0, noiseLevel) on every inlier
  double outlierStd = 0.5;   // outliers ~ N(0, outlierStd^2) per coordinate

  DeformKind deform = DeformKind::none;
  double angle = 0.0;                    // rotation / rigid
  double scale = 1.0;                    // rigid
  Eigen::Vector2d translation{0.0, 0.0};  // rigid
  // Non-rigid: displacement = (1/N) G W over the N side-B inliers, with
  // W ~ N(0, nonrigidWeightStd^2) and Gaussian width nonrigidBeta.
  double nonrigidBeta = 1.0;
  double nonrigidWeightStd = 0.5;

  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthInstance {
  PointSet ptsA, ptsB;
  InlierPartition gt;
};

/// Dense template points (before inlier sub-sampling), scaled to roughly
/// unit radius about the origin.
Matrix template_points(const SynthConfig& cfg);

/// Samples inliers from the template, deforms side B's inliers, adds
/// uniform noise to both sides, appends Gaussian outliers and shuffles
/// each side. Same config and seed give identical instances.
SynthInstance gen_synthetic(const SynthConfig& cfg);

/// Instance whose outliers sit far away from every inlier and from each
/// other, so edge weights and attributes of inlier-inlier edges dominate.
SynthInstance gen_separated_instance(Index inliers, Index outliersPerSide, std::uint64_t seed);

/// Satisfaction of the consistency / distinguishability conditions on an
/// instance, as rates in [0,1] (premises as booleans).
struct PremiseReport {
  double unaryConsistency = 0.0;        // inliers whose cheapest partner is the true one
  double unaryDistinguishability = 0.0;  // outlier pairs costlier than every true pair
  bool adjacencyPremise = false;        // inlier-inlier edge weights dominate, both sides
  bool attributePremise = false;        // same for |attributes|
};

PremiseReport evaluate_premises(const MatchProblem& prob, const InlierPartition& gtProblemOrient);

/// Ground truth expressed in the orientation of `prob`.
InlierPartition to_problem(const MatchProblem& prob, const InlierPartition& gt);

struct ConditionCurves {
  std::vector<std::vector<double>> trials;  // trials x (maxDisturb + 1)
  std::vector<double> mean;
};

/// For d = 0..maxDisturb, forces d ground-truth inliers onto wrong partners
/// in every linear subproblem and records F of the best binary matching the
/// solver finds. d = 0 starts from the ground truth. Each trial draws a new
/// order of disturbed inliers.
ConditionCurves verify_condition(const SynthInstance& inst, Index maxDisturb, int trials,
                                 std::uint64_t seed, const ProblemConfig& pcfg = {},
                                 const SolverConfig& scfg = {});

/// The d forced pairs (problem orientation) used by verify_condition for a
/// given inlier order: the first d inliers each take the partner of the next
/// one, cycling through d+1 inliers (or d when all are disturbed).
std::vector<std::pair<Index, Index>> disturbed_pairs(const InlierPartition& gtProblemOrient,
                                                     const std::vector<Index>& order, Index d);

struct ReportRow {
  std::string experiment;
  std::string configId;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  double elapsedMs = 0.0;
};

/// Called once per solved instance: the config id, trial, the instance and
/// the outlier-removal report (both runs for removal-precision).
using TrialObserver =
    std::function<void(const std::string&, int, const SynthInstance&, const RemovalReport&)>;

struct ExperimentSpec {
  std::string name;  // rotation-sweep | outlier-sweep-rigid | outlier-sweep-nonrigid |
                     // removal-precision | condition-verify
  std::uint64_t seed = 42;
  int trials = 0;               // 0: experiment default
  std::vector<double> grid;     // angles or outlier ratios; empty: experiment default
  std::vector<TemplateKind> templates;  // empty: experiment default
  Index inlierCount = 0;        // 0: experiment default
  double noiseLevel = 0.01;
  bool timing = false;          // elapsed-ms column stays 0 unless set
  DgmConfig dgm;  // dgm.removal.solver is replaced by `solver`
  // Frank-Wolfe settles well within 100 iterations on these instances.
  SolverConfig solver = [] {
    SolverConfig c;
    c.maxIter = 100;
    return c;
  }();
  TrialObserver observer;  // optional
};

/// Deterministic per-trial seed derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t configIndex, std::uint64_t trial);

std::vector<ReportRow> run_experiment(const ExperimentSpec& spec);

std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_json(const std::vector<ReportRow>& rows);

/// Mean and (population) standard deviation of a metric per config.
struct MetricSummary {
  std::string configId;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};
std::vector<MetricSummary> summarize(const std::vector<ReportRow>& rows);

}  // namespace zac
