// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "lbb/gnn.hpp"

namespace lbb {

// Versioned JSON tensor dump. The parameter count doubles as a shape
// checksum: it must match the count derived from the stored hidden width.
inline void save_checkpoint(const gcnn_params& params, const std::string& path,
                            const nlohmann::json& config_echo = nlohmann::json::object()) {
  nlohmann::json j;
  j["format"] = "lbb-gcnn";
  j["version"] = 1;
  j["hidden"] = params.hidden;
  j["d_x"] = kVarFeatures;
  j["d_c"] = kConFeatures;
  j["d_e"] = kEdgeFeatures;
  j["param_count"] = params.flat.size();
  std::vector<double> values(params.flat.data(), params.flat.data() + params.flat.size());
  j["params"] = std::move(values);
  j["config"] = config_echo;
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << j.dump(1) << '\n';
  if (!out) throw io_error("write failed on '" + path + "'");
}

struct checkpoint {
  gcnn_params params;
  nlohmann::json config;
};

inline checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("cannot parse checkpoint '" + path + "': " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "lbb-gcnn")
      throw schema_error("'" + path + "' is not a gcnn checkpoint");
    if (j.at("version").get<int>() != 1)
      throw schema_error("unsupported checkpoint version in '" + path + "'");
    if (j.at("d_x").get<int>() != kVarFeatures || j.at("d_c").get<int>() != kConFeatures ||
        j.at("d_e").get<int>() != kEdgeFeatures)
      throw schema_error("feature widths in '" + path + "' do not match this build");
    checkpoint out;
    out.params.hidden = j.at("hidden").get<int>();
    const auto values = j.at("params").get<std::vector<double>>();
    const long expected = gcnn_params::param_count(out.params.hidden);
    if (j.at("param_count").get<long>() != expected ||
        static_cast<long>(values.size()) != expected)
      throw schema_error("parameter count mismatch in '" + path + "': expected " +
                         std::to_string(expected));
    out.params.flat = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                        static_cast<long>(values.size()));
    out.config = j.value("config", nlohmann::json::object());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("malformed checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace lbb
