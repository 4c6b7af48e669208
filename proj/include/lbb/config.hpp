// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbb/instance_gen.hpp"
#include "lbb/mcts.hpp"
#include "lbb/training.hpp"

namespace lbb {

struct family_block {
  family_spec spec;  // params template; per-instance seeds are derived
  int count_train = 0;
  int count_test = 0;
};

struct eval_strategy {
  std::string name;        // random | fsb | policy | policy+mcts
  std::string label;       // row label in outputs; defaults to name
  std::string checkpoint;  // required for policy strategies
  mcts_config mcts;        // used by policy+mcts
};

struct solve_limits_config {
  long long node_limit = 100000;
  double time_limit_s = kInf;
  double score_T = 0.0;  // required, no default
  int lp_iter_limit = kDefaultLpIterLimit;
};

struct training_config {
  long long collect_node_cap = 50;
  double gamma = 0.99;
  int pretrain_epochs = 30;
  double pretrain_lr = 1e-3;
  int batch_size = 16;
  ppo_config ppo;
  int ppo_rounds = 3;
  long long ppo_node_cap = 50;
  mcts_config mcts;
  long long visit_threshold = 10;
  int refine_epochs = 20;
  double refine_lr = 1e-3;
  int roots_per_instance = 4;
};

struct paths_config {
  std::string instances;
  std::string datasets;
  std::string checkpoints;
  std::string results;
};

struct experiment_config {
  uint64_t seed = 1;
  std::string clock = "real";  // "real" | "fake"
  int hidden = kDefaultHidden;
  int jobs = 1;
  std::vector<family_block> families;
  std::vector<eval_strategy> strategies;
  std::vector<uint64_t> seeds;
  solve_limits_config limits;
  training_config training;
  paths_config paths;
  nlohmann::json raw;  // canonical parsed config, hashed into manifests
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field)) throw config_error("missing required config field '" + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("config field '" + field + "' has the wrong type");
  }
}

template <typename T>
T value_or(const nlohmann::json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("config field '" + field + "' has the wrong type");
  }
}

inline family_spec parse_family_params(const std::string& family, const nlohmann::json& p) {
  family_spec spec;
  spec.family = family_from_string(family);
  switch (spec.family) {
    case family_kind::set_covering: {
      set_covering_params d;
      d.rows = value_or(p, "rows", d.rows);
      d.cols = value_or(p, "cols", d.cols);
      d.density = value_or(p, "density", d.density);
      d.max_cost = value_or(p, "max_cost", d.max_cost);
      spec.params = d;
      break;
    }
    case family_kind::combinatorial_auction: {
      combinatorial_auction_params d;
      d.items = value_or(p, "items", d.items);
      d.bids = value_or(p, "bids", d.bids);
      d.add_prob = value_or(p, "add_prob", d.add_prob);
      spec.params = d;
      break;
    }
    case family_kind::capacitated_facility_location: {
      facility_location_params d;
      d.facilities = value_or(p, "facilities", d.facilities);
      d.customers = value_or(p, "customers", d.customers);
      d.capacity_ratio = value_or(p, "capacity_ratio", d.capacity_ratio);
      spec.params = d;
      break;
    }
    case family_kind::maximum_independent_set: {
      independent_set_params d;
      d.nodes = value_or(p, "nodes", d.nodes);
      d.affinity = value_or(p, "affinity", d.affinity);
      spec.params = d;
      break;
    }
  }
  return spec;
}

inline mcts_config parse_mcts(const nlohmann::json& j, const mcts_config& defaults) {
  mcts_config m = defaults;
  m.top_k = value_or(j, "top_k", m.top_k);
  m.max_depth = value_or(j, "max_depth", m.max_depth);
  m.n_sims = value_or(j, "n_sims", m.n_sims);
  m.c_explore = value_or(j, "c_explore", m.c_explore);
  m.gamma = value_or(j, "gamma", m.gamma);
  return m;
}

}  // namespace detail

inline uint64_t config_hash(const nlohmann::json& j) { return hash_tag(j.dump()); }

// Parses and validates an experiment config. out_dir, when nonempty,
// reroots every relative output path (the CLI wires --out and the
// LBB_OUT_DIR environment variable into it).
inline experiment_config parse_config(const nlohmann::json& j, const std::string& out_dir = "") {
  using detail::require;
  using detail::value_or;
  experiment_config cfg;
  cfg.raw = j;
  cfg.seed = value_or<uint64_t>(j, "seed", 1);
  cfg.clock = value_or<std::string>(j, "clock", "real");
  if (cfg.clock != "real" && cfg.clock != "fake")
    throw config_error("config field 'clock' must be \"real\" or \"fake\"");
  cfg.hidden = value_or(j, "hidden", kDefaultHidden);
  if (cfg.hidden < 1) throw config_error("config field 'hidden' must be positive");
  cfg.jobs = value_or(j, "jobs", 1);
  if (cfg.jobs < 1) throw config_error("config field 'jobs' must be positive");

  if (!j.contains("families") || !j.at("families").is_array() || j.at("families").empty())
    throw config_error("config field 'families' must be a non-empty array");
  for (const auto& f : j.at("families")) {
    family_block block;
    const auto family = require<std::string>(f, "family");
    try {
      block.spec = detail::parse_family_params(family, f.value("params", nlohmann::json::object()));
    } catch (const bad_params& e) {
      throw config_error(std::string("families: ") + e.what());
    }
    block.count_train = value_or(f, "count_train", 0);
    block.count_test = require<int>(f, "count_test");  // no default: test-set size must be pinned
    if (block.count_train < 0 || block.count_test < 0)
      throw config_error("family '" + family + "': instance counts must be >= 0");
    cfg.families.push_back(std::move(block));
  }

  for (const auto& s : j.value("strategies", nlohmann::json::array())) {
    eval_strategy st;
    st.name = require<std::string>(s, "name");
    if (st.name != "random" && st.name != "fsb" && st.name != "policy" &&
        st.name != "policy+mcts")
      throw config_error("strategies: unknown strategy '" + st.name + "'");
    st.label = value_or<std::string>(s, "label", st.name);
    st.checkpoint = value_or<std::string>(s, "checkpoint", "");
    if ((st.name == "policy" || st.name == "policy+mcts") && st.checkpoint.empty())
      throw config_error("strategy '" + st.label + "' requires a 'checkpoint'");
    st.mcts = detail::parse_mcts(s.value("mcts", nlohmann::json::object()), mcts_config{});
    cfg.strategies.push_back(std::move(st));
  }

  cfg.seeds = value_or<std::vector<uint64_t>>(j, "seeds", {1, 2, 3, 4, 5});
  if (cfg.seeds.empty()) throw config_error("config field 'seeds' must be non-empty");
  if (std::set<uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    throw config_error("config field 'seeds' must hold distinct values");

  const auto& lim = j.value("limits", nlohmann::json::object());
  cfg.limits.node_limit = detail::value_or<long long>(lim, "node_limit", cfg.limits.node_limit);
  cfg.limits.time_limit_s = detail::value_or(lim, "time_limit_s", cfg.limits.time_limit_s);
  cfg.limits.lp_iter_limit = detail::value_or(lim, "lp_iter_limit", cfg.limits.lp_iter_limit);
  if (!lim.contains("score_T"))
    throw config_error("missing required config field 'limits.score_T'");
  cfg.limits.score_T = detail::require<double>(lim, "score_T");
  if (!(cfg.limits.score_T > 0.0))
    throw config_error("config field 'limits.score_T' must be positive");

  const auto& tr = j.value("training", nlohmann::json::object());
  cfg.training.collect_node_cap =
      detail::value_or<long long>(tr, "collect_node_cap", cfg.training.collect_node_cap);
  cfg.training.gamma = detail::value_or(tr, "gamma", cfg.training.gamma);
  cfg.training.pretrain_epochs = detail::value_or(tr, "pretrain_epochs", cfg.training.pretrain_epochs);
  cfg.training.pretrain_lr = detail::value_or(tr, "pretrain_lr", cfg.training.pretrain_lr);
  cfg.training.batch_size = detail::value_or(tr, "batch_size", cfg.training.batch_size);
  const auto& ppo = tr.value("ppo", nlohmann::json::object());
  cfg.training.ppo.epsilon = detail::value_or(ppo, "epsilon", cfg.training.ppo.epsilon);
  cfg.training.ppo.c1 = detail::value_or(ppo, "c1", cfg.training.ppo.c1);
  cfg.training.ppo.c2 = detail::value_or(ppo, "c2", cfg.training.ppo.c2);
  cfg.training.ppo.epochs = detail::value_or(ppo, "epochs", cfg.training.ppo.epochs);
  cfg.training.ppo.lr = detail::value_or(ppo, "lr", cfg.training.ppo.lr);
  cfg.training.ppo.batch_size = detail::value_or(ppo, "batch_size", cfg.training.batch_size);
  cfg.training.ppo.gamma = cfg.training.gamma;
  cfg.training.ppo_rounds = detail::value_or(ppo, "rounds", cfg.training.ppo_rounds);
  cfg.training.ppo_node_cap = detail::value_or<long long>(ppo, "node_cap", cfg.training.collect_node_cap);
  const auto& mc = tr.value("mcts", nlohmann::json::object());
  cfg.training.mcts = detail::parse_mcts(mc, mcts_config{});
  cfg.training.mcts.gamma = cfg.training.gamma;
  cfg.training.visit_threshold =
      detail::value_or<long long>(mc, "visit_threshold", cfg.training.visit_threshold);
  cfg.training.refine_epochs = detail::value_or(mc, "refine_epochs", cfg.training.refine_epochs);
  cfg.training.refine_lr = detail::value_or(mc, "refine_lr", cfg.training.refine_lr);
  cfg.training.roots_per_instance =
      detail::value_or(mc, "roots_per_instance", cfg.training.roots_per_instance);

  const auto& paths = j.value("paths", nlohmann::json::object());
  cfg.paths.instances = detail::value_or<std::string>(paths, "instances", "out/instances");
  cfg.paths.datasets = detail::value_or<std::string>(paths, "datasets", "out/datasets");
  cfg.paths.checkpoints = detail::value_or<std::string>(paths, "checkpoints", "out/checkpoints");
  cfg.paths.results = detail::value_or<std::string>(paths, "results", "out/results");
  if (!out_dir.empty()) {
    const auto reroot = [&](std::string& p) {
      if (!std::filesystem::path(p).is_absolute())
        p = (std::filesystem::path(out_dir) / p).string();
    };
    reroot(cfg.paths.instances);
    reroot(cfg.paths.datasets);
    reroot(cfg.paths.checkpoints);
    reroot(cfg.paths.results);
  }
  return cfg;
}

inline experiment_config load_config(const std::string& path, const std::string& out_dir = "") {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("cannot parse config '" + path + "': " + e.what());
  }
  return parse_config(j, out_dir);
}

}  // namespace lbb
