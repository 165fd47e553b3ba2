#pragma once

#include "zacgm/core.hpp"
#include "zacgm/deformable.hpp"
#include "zacgm/outliers.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace zac {

/// Malformed input file or field; the message names the offending field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"points": [[x, y], ...], "labels": [...]} with labels optional.
PointSet parse_point_set(const std::string& text, const std::string& source = "<string>");
PointSet read_point_set(const std::string& path);
std::string point_set_json(const PointSet& pts);

/// {"pairs": [[i, a], ...]} in the caller's orientation.
InlierPartition parse_ground_truth(const std::string& text, Index m, Index n,
                                   const std::string& source = "<string>");
InlierPartition read_ground_truth(const std::string& path, Index m, Index n);

/// All matrices as row-major nested arrays.
std::string problem_json(const MatchProblem& prob);

/// Pair list, k, outlier sets, objective trace, round count and (when a
/// ground truth is given) matching metrics.
std::string solve_report_json(const RemovalReport& rep, Index k, bool includeTiming,
                              const std::optional<MatchMetrics>& quality = std::nullopt);

std::string transform_json(const Transform& tau);

/// Solve report fields plus "transform", "dgmIterations" and, when known,
/// "averageError".
std::string dgm_report_json(const DgmResult& res, Index k, bool includeTiming,
                            const std::optional<MatchMetrics>& quality = std::nullopt,
                            std::optional<double> averageError = std::nullopt);

std::string read_text_file(const std::string& path);
/// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace zac
