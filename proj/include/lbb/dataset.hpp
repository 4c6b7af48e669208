// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbb/gnn.hpp"

namespace lbb {

// One expanded node of a solve: the observed state, the chosen action, the
// per-candidate strong-branching scores when the expert produced them, the
// local reward, and links to the child records (-1 when a child was never
// expanded). value_target is filled by the value recursion, normalized by
// the trajectory's root scale.
struct sb_sample {
  bipartite_state state;
  std::map<int, double> sb_scores;  // empty for policy rollouts
  int action = -1;
  double reward = 0.0;
  int left_child = -1;   // index into the owning trajectory
  int right_child = -1;
  bool is_leaf = false;      // no expanded children
  bool excluded = false;     // both children infeasible: reward is the cap
  double value_target = 0.0;
};

// The expansion records of one solve in expansion order, tree-linked.
struct trajectory {
  std::string instance;
  double root_scale = 1.0;  // 1 + |root LP objective|
  std::vector<sb_sample> records;
};

inline nlohmann::json state_to_json(const bipartite_state& s) {
  nlohmann::json j;
  j["n"] = s.num_vars();
  j["m"] = s.num_cons();
  auto mat = [](const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (long i = 0; i < M.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (long c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["X"] = mat(s.X);
  j["C"] = mat(s.C);
  nlohmann::json edges = nlohmann::json::array();
  for (int k = 0; k < s.num_edges(); ++k)
    edges.push_back({s.edge_row[k], s.edge_col[k], s.edge_val[k]});
  j["E"] = std::move(edges);
  std::vector<int> mask(s.mask.begin(), s.mask.end());
  j["mask"] = mask;
  return j;
}

inline bipartite_state state_from_json(const nlohmann::json& j) {
  bipartite_state s;
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  auto mat = [](const nlohmann::json& rows, int r, int c) {
    if (static_cast<int>(rows.size()) != r)
      throw schema_error("state matrix row count mismatch");
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c)
        throw schema_error("state matrix column count mismatch");
      for (int k = 0; k < c; ++k) M(i, k) = rows[i][k].get<double>();
    }
    return M;
  };
  s.X = mat(j.at("X"), n, kVarFeatures);
  s.C = mat(j.at("C"), m, kConFeatures);
  const auto& edges = j.at("E");
  s.edge_val.resize(static_cast<long>(edges.size()));
  long k = 0;
  for (const auto& e : edges) {
    s.edge_row.push_back(e.at(0).get<int>());
    s.edge_col.push_back(e.at(1).get<int>());
    s.edge_val[k++] = e.at(2).get<double>();
  }
  const auto mask = j.at("mask").get<std::vector<int>>();
  if (static_cast<int>(mask.size()) != n) throw schema_error("state mask length mismatch");
  s.mask.assign(mask.begin(), mask.end());
  return s;
}

inline nlohmann::json sample_to_json(const sb_sample& r) {
  nlohmann::json j;
  j["state"] = state_to_json(r.state);
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [var, score] : r.sb_scores) scores[std::to_string(var)] = score;
  j["sb_scores"] = std::move(scores);
  j["action"] = r.action;
  j["reward"] = r.reward;
  j["left_child"] = r.left_child;
  j["right_child"] = r.right_child;
  j["is_leaf"] = r.is_leaf;
  j["excluded"] = r.excluded;
  j["value_target"] = r.value_target;
  return j;
}

inline sb_sample sample_from_json(const nlohmann::json& j) {
  sb_sample r;
  r.state = state_from_json(j.at("state"));
  for (const auto& [key, val] : j.at("sb_scores").items())
    r.sb_scores[std::stoi(key)] = val.get<double>();
  r.action = j.at("action").get<int>();
  r.reward = j.at("reward").get<double>();
  r.left_child = j.at("left_child").get<int>();
  r.right_child = j.at("right_child").get<int>();
  r.is_leaf = j.at("is_leaf").get<bool>();
  r.excluded = j.at("excluded").get<bool>();
  r.value_target = j.at("value_target").get<double>();
  return r;
}

inline constexpr const char* kDatasetSchema = "lbb-dataset";

// JSON-lines: one schema header line, then one line per trajectory record.
inline void write_dataset(const std::vector<trajectory>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  nlohmann::json header;
  header["schema"] = kDatasetSchema;
  header["version"] = 1;
  out << header.dump() << '\n';
  for (size_t t = 0; t < data.size(); ++t) {
    for (size_t i = 0; i < data[t].records.size(); ++i) {
      nlohmann::json j = sample_to_json(data[t].records[i]);
      j["traj"] = t;
      j["index"] = i;
      j["instance"] = data[t].instance;
      j["root_scale"] = data[t].root_scale;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw io_error("write failed on '" + path + "'");
}

inline std::vector<trajectory> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw schema_error("'" + path + "' is empty");
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("schema").get<std::string>() != kDatasetSchema ||
        header.at("version").get<int>() != 1)
      throw schema_error("'" + path + "' has an unsupported dataset header");
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("bad dataset header in '" + path + "': " + e.what());
  }
  std::vector<trajectory> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const size_t t = j.at("traj").get<size_t>();
      const size_t i = j.at("index").get<size_t>();
      if (t >= out.size()) out.resize(t + 1);
      if (i != out[t].records.size())
        throw schema_error("records out of order");
      out[t].instance = j.at("instance").get<std::string>();
      out[t].root_scale = j.at("root_scale").get<double>();
      out[t].records.push_back(sample_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw schema_error("bad dataset record at " + path + ":" + std::to_string(line_no) +
                         ": " + e.what());
    }
  }
  return out;
}

}  // namespace lbb
