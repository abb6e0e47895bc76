#pragma once

// JSON files for instances: a distribution is {"support": [...], "probs": [...]}
// and a cost matrix is {"rows": M, "cols": N, "entries": [[...], ...]}.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

using Json = nlohmann::json;

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline Distribution distribution_from_json(const Json& j) {
  try {
    auto probs = j.at("probs").get<std::vector<double>>();
    if (j.contains("support")) return Distribution(std::move(probs), SupportGrid(j.at("support").get<std::vector<double>>()));
    return Distribution(std::move(probs));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("distribution: ") + e.what());
  }
}

inline Json to_json(const Distribution& p) {
  return Json{{"support", std::vector<double>(p.support().points().begin(), p.support().points().end())},
              {"probs", std::vector<double>(p.probs().begin(), p.probs().end())}};
}

inline CostMatrix cost_matrix_from_json(const Json& j) {
  try {
    auto rows = j.at("rows").get<std::size_t>();
    auto cols = j.at("cols").get<std::size_t>();
    auto entries = j.at("entries").get<std::vector<std::vector<double>>>();
    if (entries.size() != rows) throw FormatError("cost matrix: entries has wrong row count");
    for (const auto& r : entries)
      if (r.size() != cols) throw FormatError("cost matrix: entries has wrong column count");
    return CostMatrix(Matrix::from_rows(entries));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("cost matrix: ") + e.what());
  }
}

inline Json to_json(const CostMatrix& c) {
  std::vector<std::vector<double>> rows(c.rows(), std::vector<double>(c.cols()));
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) rows[i][j] = c(i, j);
  return Json{{"rows", c.rows()}, {"cols", c.cols()}, {"entries", rows}};
}

inline Distribution load_distribution(const std::string& path) { return distribution_from_json(read_json_file(path)); }
inline CostMatrix load_cost_matrix(const std::string& path) { return cost_matrix_from_json(read_json_file(path)); }

}  // namespace rdp
