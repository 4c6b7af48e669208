// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lbb/milp.hpp"
#include "lbb/rng.hpp"

namespace lbb {

using json = nlohmann::json;

inline json instance_to_json(const milp_instance& inst) {
  json j;
  j["name"] = inst.name;
  j["n"] = inst.num_vars;
  j["m"] = inst.num_cons;
  j["c"] = inst.objective;
  json a = json::array();
  for (const auto& e : inst.rows) a.push_back({e.row, e.col, e.value});
  j["A"] = std::move(a);
  j["b"] = inst.rhs;
  json l = json::array(), u = json::array();
  for (double v : inst.lower) {
    if (std::isfinite(v))
      l.push_back(v);
    else
      l.push_back("-inf");
  }
  for (double v : inst.upper) {
    if (std::isfinite(v))
      u.push_back(v);
    else
      u.push_back("inf");
  }
  j["l"] = std::move(l);
  j["u"] = std::move(u);
  j["I"] = inst.integer_set;
  j["sense_flipped"] = inst.sense_flipped;
  j["family"] = inst.family;
  j["seed"] = inst.seed;
  j["rng"] = kRngName;
  return j;
}

namespace detail {

inline const json& require_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw schema_error(std::string("missing field '") + key + "'");
  return *it;
}

inline double bound_from_json(const json& v, const char* key, double inf_sign) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    throw schema_error(std::string("field '") + key + "': bad bound sentinel '" + s + "'");
  }
  if (!v.is_number()) throw schema_error(std::string("field '") + key + "': expected number");
  (void)inf_sign;
  return v.get<double>();
}

}  // namespace detail

inline milp_instance instance_from_json(const json& j) {
  using detail::require_field;
  milp_instance inst;
  try {
    inst.name = require_field(j, "name").get<std::string>();
    inst.num_vars = require_field(j, "n").get<int>();
    inst.num_cons = require_field(j, "m").get<int>();
    inst.objective = require_field(j, "c").get<std::vector<double>>();
    for (const auto& row : require_field(j, "A")) {
      if (!row.is_array() || row.size() != 3)
        throw schema_error("field 'A': entries must be [row, col, value]");
      inst.rows.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<double>()});
    }
    inst.rhs = require_field(j, "b").get<std::vector<double>>();
    for (const auto& v : require_field(j, "l"))
      inst.lower.push_back(detail::bound_from_json(v, "l", -1.0));
    for (const auto& v : require_field(j, "u"))
      inst.upper.push_back(detail::bound_from_json(v, "u", 1.0));
    inst.integer_set = require_field(j, "I").get<std::vector<int>>();
    inst.sense_flipped = require_field(j, "sense_flipped").get<bool>();
    inst.family = require_field(j, "family").get<std::string>();
    inst.seed = require_field(j, "seed").get<uint64_t>();
    if (require_field(j, "rng").get<std::string>() != kRngName)
      throw schema_error("field 'rng': unsupported generator '" +
                         j["rng"].get<std::string>() + "'");
  } catch (const json::exception& e) {
    throw schema_error(std::string("malformed instance json: ") + e.what());
  }
  validate_instance(inst);
  return inst;
}

inline void write_instance(const milp_instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << instance_to_json(inst).dump(1) << '\n';
  if (!out) throw io_error("write failed on '" + path + "'");
}

inline milp_instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw schema_error("cannot parse '" + path + "': " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace lbb
