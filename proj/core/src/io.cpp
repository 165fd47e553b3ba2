#include "zacgm/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace zac {

using nlohmann::json;

namespace {

// NaN / Infinity are not JSON, but hand-edited files contain them. Outside
// string literals they become null so the schema check can name the field.
std::string null_nonfinite_literals(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool inString = false;
  for (std::size_t p = 0; p < text.size();) {
    const char ch = text[p];
    if (inString) {
      out += ch;
      if (ch == '\\' && p + 1 < text.size()) out += text[++p];
      else if (ch == '"') inString = false;
      ++p;
      continue;
    }
    if (ch == '"') inString = true;
    bool replaced = false;
    for (const char* tok : {"-Infinity", "Infinity", "NaN"}) {
      const std::size_t len = std::char_traits<char>::length(tok);
      if (text.compare(p, len, tok) == 0) {
        out += "null";
        p += len;
        replaced = true;
        break;
      }
    }
    if (!replaced) out += text[p++];
  }
  return out;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(null_nonfinite_literals(text));
  } catch (const json::parse_error& e) {
    throw SchemaError(source + ": malformed JSON: " + e.what());
  }
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json pairs_json(const std::vector<std::pair<Index, Index>>& pairs) {
  json out = json::array();
  for (const auto& [i, a] : pairs) out.push_back({i, a});
  return out;
}

json normalization_json(const Normalization& nz) {
  json mean = json::array();
  for (Index c = 0; c < nz.mean.size(); ++c) mean.push_back(nz.mean(c));
  return {{"mean", mean}, {"scale", nz.scale}};
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

PointSet parse_point_set(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  if (!doc.is_object() || !doc.contains("points"))
    throw SchemaError(source + ": missing field 'points'");
  const json& pts = doc.at("points");
  if (!pts.is_array() || pts.empty())
    throw SchemaError(source + ": field 'points' must be a non-empty array");
  const std::size_t dim = pts.front().is_array() ? pts.front().size() : 0;
  if (dim < 2) throw SchemaError(source + ": points[0] must have at least 2 coordinates");

  Matrix M(static_cast<Index>(pts.size()), static_cast<Index>(dim));
  for (std::size_t r = 0; r < pts.size(); ++r) {
    const std::string where = source + ": points[" + std::to_string(r) + "]";
    if (!pts[r].is_array() || pts[r].size() != dim)
      throw SchemaError(where + " must have " + std::to_string(dim) + " coordinates");
    for (std::size_t c = 0; c < dim; ++c) {
      const json& v = pts[r][c];
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw SchemaError(where + "[" + std::to_string(c) + "] is not a finite number");
      M(static_cast<Index>(r), static_cast<Index>(c)) = v.get<double>();
    }
  }

  std::vector<std::string> labels;
  if (doc.contains("labels") && !doc.at("labels").is_null()) {
    const json& lb = doc.at("labels");
    if (!lb.is_array() || lb.size() != pts.size())
      throw SchemaError(source + ": field 'labels' must list one string per point");
    for (std::size_t r = 0; r < lb.size(); ++r) {
      if (!lb[r].is_string())
        throw SchemaError(source + ": labels[" + std::to_string(r) + "] is not a string");
      labels.push_back(lb[r].get<std::string>());
    }
  }
  return PointSet(std::move(M), std::move(labels));
}

PointSet read_point_set(const std::string& path) {
  return parse_point_set(read_text_file(path), path);
}

std::string point_set_json(const PointSet& pts) {
  json doc = {{"points", matrix_json(pts.points)}};
  if (!pts.labels.empty()) doc["labels"] = pts.labels;
  return doc.dump(2) + "\n";
}

InlierPartition parse_ground_truth(const std::string& text, Index m, Index n,
                                   const std::string& source) {
  const json doc = parse_json(text, source);
  if (!doc.is_object() || !doc.contains("pairs") || !doc.at("pairs").is_array())
    throw SchemaError(source + ": missing array field 'pairs'");
  std::vector<std::pair<Index, Index>> pairs;
  const json& arr = doc.at("pairs");
  for (std::size_t p = 0; p < arr.size(); ++p) {
    const std::string where = source + ": pairs[" + std::to_string(p) + "]";
    const json& e = arr[p];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw SchemaError(where + " must be [i, a] integers");
    const auto i = e[0].get<Index>(), a = e[1].get<Index>();
    if (i < 0 || i >= m || a < 0 || a >= n) throw SchemaError(where + " is out of range");
    pairs.emplace_back(i, a);
  }
  InlierPartition gt = InlierPartition::from_pairs(m, n, pairs);
  if (!gt.consistent(m, n)) throw SchemaError(source + ": 'pairs' is not a partial permutation");
  return gt;
}

InlierPartition read_ground_truth(const std::string& path, Index m, Index n) {
  return parse_ground_truth(read_text_file(path), m, n, path);
}

std::string problem_json(const MatchProblem& prob) {
  json doc = {{"m", prob.m},
              {"n", prob.n},
              {"swapped", prob.swapped},
              {"lambda0", prob.lambda0()},
              {"lambda1", prob.lambda1()},
              {"lambda2", prob.lambda2()},
              {"D", matrix_json(prob.D)},
              {"adjA", matrix_json(prob.adjA)},
              {"adjB", matrix_json(prob.adjB)},
              {"attrA", matrix_json(prob.attrA)},
              {"attrB", matrix_json(prob.attrB)}};
  return doc.dump(2) + "\n";
}

namespace {

json solve_report_doc(const RemovalReport& rep, Index k, bool includeTiming,
                      const std::optional<MatchMetrics>& quality) {
  const InlierPartition& part = rep.partition;
  json doc = {{"k", k},
              {"kFinal", rep.solve.kFinal},
              {"pairs", pairs_json(rep.solve.finalBinary.pairs())},
              {"inliersA", part.inliersA},
              {"outliersA", part.outliersA},
              {"inliersB", part.inliersB},
              {"outliersB", part.outliersB},
              {"objectiveTrace", rep.solve.objectiveTrace},
              {"iterations", rep.solve.iterations},
              {"rounds", rep.rounds},
              {"warning", rep.warning},
              {"elapsedSeconds", includeTiming ? rep.solve.elapsed : 0.0}};
  if (quality) {
    doc["metrics"] = {{"recall", quality->recall},
                      {"precision", quality->precision},
                      {"fMeasure", quality->f_measure}};
  }
  return doc;
}

json transform_doc(const Transform& tau) {
  json doc;
  if (const auto* r = std::get_if<RigidTransform>(&tau)) {
    json t = json::array();
    for (Index c = 0; c < r->t.size(); ++c) t.push_back(r->t(c));
    doc = {{"type", "rigid"}, {"s", r->s}, {"R", matrix_json(r->R)}, {"t", t}};
  } else {
    const auto& nr = std::get<NonRigidTransform>(tau);
    doc = {{"type", "nonrigid"},
           {"beta", nr.beta},
           {"lambdaR", nr.lambdaR},
           {"controlPoints", matrix_json(nr.controlPoints)},
           {"W", matrix_json(nr.W)},
           {"source", normalization_json(nr.source)},
           {"target", normalization_json(nr.target)}};
  }
  return doc;
}

}  // namespace

std::string solve_report_json(const RemovalReport& rep, Index k, bool includeTiming,
                              const std::optional<MatchMetrics>& quality) {
  return solve_report_doc(rep, k, includeTiming, quality).dump(2) + "\n";
}

std::string transform_json(const Transform& tau) { return transform_doc(tau).dump(2) + "\n"; }

std::string dgm_report_json(const DgmResult& res, Index k, bool includeTiming,
                            const std::optional<MatchMetrics>& quality,
                            std::optional<double> averageError) {
  json doc = solve_report_doc(res.match, k, includeTiming, quality);
  doc["dgmIterations"] = res.iterations;
  doc["transform"] = transform_doc(res.transform);
  if (averageError) doc["averageError"] = *averageError;
  return doc.dump(2) + "\n";
}

}  // namespace zac
