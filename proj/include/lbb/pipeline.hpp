// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "lbb/checkpoint.hpp"
#include "lbb/config.hpp"
#include "lbb/dataset.hpp"
#include "lbb/instance_io.hpp"
#include "lbb/mcts.hpp"
#include "lbb/training.hpp"

namespace lbb {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_manifest(const experiment_config& cfg, const std::string& stage,
                           const std::string& dir, const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m;
  m["stage"] = stage;
  m["config_hash"] = config_hash(cfg.raw);
  m["seed"] = cfg.seed;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["extra"] = extra;
  const auto path = fs::path(dir) / ("manifest_" + stage + ".json");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write manifest '" + path.string() + "'");
  out << m.dump(1) << '\n';
}

inline std::string split_dir(const experiment_config& cfg, const family_block& block,
                             const char* split) {
  return (fs::path(cfg.paths.instances) / to_string(block.spec.family) / split).string();
}

// Deterministic per-instance seed stream.
inline uint64_t instance_seed(const experiment_config& cfg, const family_block& block,
                              const char* split, int index) {
  const std::string tag = std::string(to_string(block.spec.family)) + "/" + split + "/" +
                          std::to_string(index);
  return rng(cfg.seed).fork(hash_tag(tag)).seed();
}

inline std::vector<std::string> list_instance_files(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename().string().rfind("manifest", 0) != 0)
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<milp_instance> load_split(const experiment_config& cfg, const char* split,
                                             const std::string& needed_by) {
  std::vector<milp_instance> out;
  for (const auto& block : cfg.families) {
    const auto dir = split_dir(cfg, block, split);
    const auto files = list_instance_files(dir);
    const int expected = split == std::string("train") ? block.count_train : block.count_test;
    if (static_cast<int>(files.size()) < expected)
      throw missing_artifact(needed_by + ": expected " + std::to_string(expected) +
                             " instance files under '" + dir + "'; run the generate stage first");
    for (const auto& f : files) out.push_back(read_instance(f));
  }
  return out;
}

inline std::string checkpoint_path(const experiment_config& cfg, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return name;
  return (fs::path(cfg.paths.checkpoints) / p).string();
}

inline std::unique_ptr<solve_clock> make_clock(const experiment_config& cfg) {
  if (cfg.clock == "fake") return std::make_unique<fake_clock>();
  return std::make_unique<real_clock>();
}

}  // namespace detail

// Writes every family's train and test instances; byte-identical on reruns
// with the same config.
inline std::vector<std::string> cmd_generate(const experiment_config& cfg) {
  std::vector<std::string> outputs;
  for (const auto& block : cfg.families) {
    for (const char* split : {"train", "test"}) {
      const int count = split == std::string("train") ? block.count_train : block.count_test;
      const auto dir = detail::split_dir(cfg, block, split);
      fs::create_directories(dir);
      for (int i = 0; i < count; ++i) {
        family_spec spec = block.spec;
        spec.seed = detail::instance_seed(cfg, block, split, i);
        const milp_instance inst = generate(spec);
        char idx[16];
        std::snprintf(idx, sizeof idx, "%04d", i);
        const auto path = (fs::path(dir) / (std::string(to_string(block.spec.family)) + "_" +
                                            idx + ".json"))
                              .string();
        write_instance(inst, path);
        outputs.push_back(path);
      }
    }
  }
  detail::write_manifest(cfg, "generate", cfg.paths.instances, {}, outputs);
  return outputs;
}

// Full-strong-branching data collection over the train split.
inline std::string cmd_collect(const experiment_config& cfg) {
  const auto instances = detail::load_split(cfg, "train", "collect");
  const auto data = collect_sb_data(instances, cfg.training.collect_node_cap,
                                    cfg.training.gamma, cfg.limits.lp_iter_limit);
  fs::create_directories(cfg.paths.datasets);
  const auto path = (fs::path(cfg.paths.datasets) / "sb_data.jsonl").string();
  write_dataset(data, path);
  size_t samples = 0;
  for (const auto& t : data) samples += t.records.size();
  nlohmann::json extra;
  extra["instances"] = instances.size();
  extra["samples"] = samples;
  detail::write_manifest(cfg, "collect", cfg.paths.datasets, {}, {path}, extra);
  return path;
}

// Imitation pretraining on the collected dataset.
inline std::string cmd_pretrain(const experiment_config& cfg) {
  const auto dataset_path = (fs::path(cfg.paths.datasets) / "sb_data.jsonl").string();
  if (!fs::exists(dataset_path))
    throw missing_artifact("pretrain: dataset '" + dataset_path +
                           "' not found; run the collect stage first");
  const auto data = read_dataset(dataset_path);
  gcnn_params params = init_params(rng(cfg.seed).fork(hash_tag("init")).seed(), cfg.hidden);
  auto [trained, curve] =
      imitation_pretrain(data, std::move(params), cfg.training.pretrain_epochs,
                         cfg.training.pretrain_lr, cfg.training.batch_size,
                         rng(cfg.seed).fork(hash_tag("pretrain")).seed());
  fs::create_directories(cfg.paths.checkpoints);
  const auto path = (fs::path(cfg.paths.checkpoints) / "pretrain.json").string();
  nlohmann::json echo;
  echo["stage"] = "pretrain";
  echo["epochs"] = cfg.training.pretrain_epochs;
  echo["lr"] = cfg.training.pretrain_lr;
  echo["batch_size"] = cfg.training.batch_size;
  echo["gamma"] = cfg.training.gamma;
  echo["seed"] = cfg.seed;
  nlohmann::json losses = nlohmann::json::array();
  for (const auto& e : curve) losses.push_back({e.policy, e.value});
  echo["loss_curve"] = std::move(losses);
  save_checkpoint(trained, path, echo);
  detail::write_manifest(cfg, "pretrain", cfg.paths.checkpoints, {dataset_path}, {path});
  return path;
}

// PPO rounds: collect one stochastic rollout per train instance, then update.
inline std::string cmd_train_ppo(const experiment_config& cfg) {
  const auto pretrain_path = (fs::path(cfg.paths.checkpoints) / "pretrain.json").string();
  if (!fs::exists(pretrain_path))
    throw missing_artifact("train-ppo: checkpoint '" + pretrain_path +
                           "' not found; run the pretrain stage first");
  const auto instances = detail::load_split(cfg, "train", "train-ppo");
  gcnn_params params = load_checkpoint(pretrain_path).params;

  ppo_config pc = cfg.training.ppo;
  nlohmann::json rounds = nlohmann::json::array();
  for (int round = 0; round < cfg.training.ppo_rounds; ++round) {
    const uint64_t round_seed =
        rng(cfg.seed).fork(hash_tag("ppo-round-" + std::to_string(round))).seed();
    const auto rollouts = collect_policy_rollouts(instances, params, cfg.training.ppo_node_cap,
                                                  cfg.training.gamma, round_seed,
                                                  cfg.limits.lp_iter_limit);
    size_t samples = 0;
    for (const auto& t : rollouts) samples += t.records.size();
    if (samples == 0) continue;  // every rollout solved at the root
    pc.seed = rng(round_seed).fork(hash_tag("update")).seed();
    auto [next, report] = ppo_update(rollouts, params, pc);
    params = std::move(next);
    rounds.push_back({{"round", round},
                      {"samples", samples},
                      {"objective_first", report.epoch_objective.front()},
                      {"objective_last", report.epoch_objective.back()}});
  }

  const auto path = (fs::path(cfg.paths.checkpoints) / "ppo.json").string();
  nlohmann::json echo;
  echo["stage"] = "train-ppo";
  echo["epsilon"] = pc.epsilon;
  echo["c1"] = pc.c1;
  echo["c2"] = pc.c2;
  echo["gamma"] = pc.gamma;
  echo["rounds"] = cfg.training.ppo_rounds;
  echo["epochs"] = pc.epochs;
  echo["lr"] = pc.lr;
  echo["node_cap"] = cfg.training.ppo_node_cap;
  echo["seed"] = cfg.seed;
  echo["round_log"] = std::move(rounds);
  save_checkpoint(params, path, echo);
  detail::write_manifest(cfg, "train_ppo", cfg.paths.checkpoints, {pretrain_path}, {path});
  return path;
}

// Tree-search refinement: search from states visited by the current policy,
// distill argmax-Q actions of well-visited states back into the network.
inline std::string cmd_refine_mcts(const experiment_config& cfg) {
  const auto ppo_path = (fs::path(cfg.paths.checkpoints) / "ppo.json").string();
  if (!fs::exists(ppo_path))
    throw missing_artifact("refine-mcts: checkpoint '" + ppo_path +
                           "' not found; run the train-ppo stage first");
  const auto instances = detail::load_split(cfg, "train", "refine-mcts");
  gcnn_params params = load_checkpoint(ppo_path).params;

  // roots: the first expansions of a greedy-policy solve per instance
  auto shared = std::make_shared<const gcnn_params>(params);
  std::vector<bipartite_state> roots;
  for (const auto& inst : instances) {
    struct root_grabber final : solve_observer {
      int want;
      std::vector<bipartite_state>* sink;
      const milp_instance* inst;
      void on_expand(const milp_instance& mi, const bnb_node& parent, const branch_decision&,
                     const bnb_node&, const bnb_node&, double, double) override {
        if (static_cast<int>(sink->size()) < want) sink->push_back(extract_state(parent, mi));
      }
    };
    std::vector<bipartite_state> mine;
    root_grabber grab;
    grab.want = cfg.training.roots_per_instance;
    grab.sink = &mine;
    policy_brancher strategy(shared);
    fake_clock clock;
    bnb_limits limits;
    limits.node_limit = 1 + 2LL * cfg.training.roots_per_instance;
    limits.lp_iter_limit = cfg.limits.lp_iter_limit;
    bnb_solve(inst, strategy, limits, clock, &grab);
    for (auto& s : mine) roots.push_back(std::move(s));
  }

  std::vector<mcts_visit> visits;
  for (size_t i = 0; i < roots.size(); ++i) {
    const uint64_t search_seed =
        rng(cfg.seed).fork(hash_tag("mcts-root-" + std::to_string(i))).seed();
    mcts_result r = mcts_search(roots[i], params, cfg.training.mcts, search_seed);
    for (auto& v : r.visits) visits.push_back(std::move(v));
  }

  gcnn_params refined =
      mcts_refine(std::move(params), visits, cfg.training.visit_threshold,
                  cfg.training.refine_epochs, cfg.training.refine_lr, cfg.training.batch_size,
                  rng(cfg.seed).fork(hash_tag("refine")).seed());

  const auto path = (fs::path(cfg.paths.checkpoints) / "refined.json").string();
  nlohmann::json echo;
  echo["stage"] = "refine-mcts";
  echo["top_k"] = cfg.training.mcts.top_k;
  echo["max_depth"] = cfg.training.mcts.max_depth;
  echo["n_sims"] = cfg.training.mcts.n_sims;
  echo["c_explore"] = cfg.training.mcts.c_explore;
  echo["visit_threshold"] = cfg.training.visit_threshold;
  echo["refine_epochs"] = cfg.training.refine_epochs;
  echo["refine_lr"] = cfg.training.refine_lr;
  echo["roots"] = roots.size();
  echo["seed"] = cfg.seed;
  save_checkpoint(refined, path, echo);
  detail::write_manifest(cfg, "refine_mcts", cfg.paths.checkpoints, {ppo_path}, {path});
  return path;
}

struct eval_cell {
  std::string family;
  std::string instance;  // file stem
  std::string strategy;  // label
  uint64_t seed = 0;
  long long nodes = 0;
  double time_s = 0.0;
  double score = 0.0;
  bool has_score = false;
  std::string status;
  bool failed = false;
  double incumbent_obj = kInf;
  bool has_incumbent = false;
  dual_bound_trace trace;
};

struct eval_outputs {
  std::string csv_path;
  std::string table_path;
  std::vector<eval_cell> cells;
};

// Held-out evaluation over (family x instance x strategy x seed) cells.
// Scores use the best incumbent found for the instance across all runs as
// the reference optimum; failed or scoreless runs are excluded and counted.
inline eval_outputs cmd_evaluate(const experiment_config& cfg) {
  if (cfg.strategies.empty())
    throw config_error("evaluate: config field 'strategies' is empty");

  struct instance_entry {
    std::string family;
    std::string stem;
    milp_instance inst;
  };
  std::vector<instance_entry> instances;
  for (const auto& block : cfg.families) {
    const auto dir = detail::split_dir(cfg, block, "test");
    const auto files = detail::list_instance_files(dir);
    if (static_cast<int>(files.size()) < block.count_test)
      throw missing_artifact("evaluate: expected " + std::to_string(block.count_test) +
                             " test instances under '" + dir + "'; run the generate stage first");
    for (const auto& f : files)
      instances.push_back(
          {to_string(block.spec.family), fs::path(f).stem().string(), read_instance(f)});
  }

  // strategy prototypes; per-cell branchers are clones with cell seeds
  struct strategy_entry {
    eval_strategy cfg;
    std::shared_ptr<const gcnn_params> params;
  };
  std::vector<strategy_entry> strategies;
  for (const auto& st : cfg.strategies) {
    strategy_entry entry{st, nullptr};
    if (st.name == "policy" || st.name == "policy+mcts") {
      const auto path = detail::checkpoint_path(cfg, st.checkpoint);
      if (!fs::exists(path))
        throw missing_artifact("evaluate: checkpoint '" + path + "' for strategy '" + st.label +
                               "' not found");
      entry.params = std::make_shared<const gcnn_params>(load_checkpoint(path).params);
    }
    strategies.push_back(std::move(entry));
  }

  std::vector<eval_cell> cells;
  struct cell_job {
    const instance_entry* inst;
    const strategy_entry* strat;
    uint64_t seed;
  };
  std::vector<cell_job> jobs;
  for (const auto& inst : instances)
    for (const auto& strat : strategies)
      for (uint64_t seed : cfg.seeds) {
        eval_cell c;
        c.family = inst.family;
        c.instance = inst.stem;
        c.strategy = strat.cfg.label;
        c.seed = seed;
        cells.push_back(std::move(c));
        jobs.push_back({&inst, &strat, seed});
      }

  const auto run_cell = [&](size_t k) {
    eval_cell& cell = cells[k];
    const cell_job& job = jobs[k];
    const uint64_t cell_seed =
        rng(job.seed).fork(hash_tag(cell.family + "/" + cell.instance + "/" + cell.strategy)).seed();
    std::unique_ptr<brancher> strategy;
    const auto& st = job.strat->cfg;
    if (st.name == "random") {
      strategy = std::make_unique<random_brancher>(cell_seed);
    } else if (st.name == "fsb") {
      strategy = std::make_unique<fsb_brancher>();
    } else if (st.name == "policy") {
      strategy = std::make_unique<policy_brancher>(job.strat->params);
    } else {
      strategy = std::make_unique<mcts_policy_brancher>(job.strat->params, st.mcts, cell_seed);
    }
    const auto clock = detail::make_clock(cfg);
    bnb_limits limits;
    limits.node_limit = cfg.limits.node_limit;
    limits.time_limit_s = cfg.limits.time_limit_s;
    limits.lp_iter_limit = cfg.limits.lp_iter_limit;
    try {
      const solve_stats stats = bnb_solve(job.inst->inst, *strategy, limits, *clock);
      cell.nodes = stats.nodes_visited;
      cell.time_s = stats.wall_time_s;
      cell.status = to_string(stats.status);
      cell.trace = stats.trace;
      if (stats.incumbent) {
        cell.has_incumbent = true;
        cell.incumbent_obj = stats.incumbent->objective;
      }
    } catch (const error& e) {
      cell.failed = true;
      cell.status = std::string("failed: ") + e.what();
    }
  };

  if (cfg.jobs <= 1) {
    for (size_t k = 0; k < cells.size(); ++k) run_cell(k);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.jobs; ++w)
      pool.emplace_back([&] {
        for (size_t k = next.fetch_add(1); k < cells.size(); k = next.fetch_add(1)) run_cell(k);
      });
    for (auto& th : pool) th.join();
  }

  // reference optimum per instance: best incumbent over all runs
  std::map<std::pair<std::string, std::string>, double> best_obj;
  for (const auto& c : cells) {
    if (!c.has_incumbent) continue;
    const auto key = std::make_pair(c.family, c.instance);
    const auto it = best_obj.find(key);
    if (it == best_obj.end() || c.incumbent_obj < it->second) best_obj[key] = c.incumbent_obj;
  }
  for (auto& c : cells) {
    if (c.failed || c.trace.events.empty()) continue;
    const auto it = best_obj.find({c.family, c.instance});
    if (it == best_obj.end()) continue;
    c.score = dual_integral_score(c.trace, cfg.limits.score_T, it->second);
    c.has_score = true;
  }

  fs::create_directories(cfg.paths.results);
  eval_outputs out;
  out.csv_path = (fs::path(cfg.paths.results) / "results.csv").string();
  {
    std::ofstream csv(out.csv_path);
    if (!csv) throw io_error("cannot write '" + out.csv_path + "'");
    csv << "# clock: " << cfg.clock << "\n";
    csv << "family,instance,strategy,seed,nodes,time_s,score,status\n";
    for (const auto& c : cells) {
      csv << c.family << ',' << c.instance << ',' << c.strategy << ',' << c.seed << ','
          << c.nodes << ',' << format_double(c.time_s) << ','
          << (c.has_score ? format_double(c.score) : "nan") << ',' << c.status << "\n";
    }
  }

  // per-metric tables: strategies as rows, families as columns, mean over
  // instances within a seed, then mean and sd across seeds
  out.table_path = (fs::path(cfg.paths.results) / "tables.md").string();
  {
    std::vector<std::string> families;
    for (const auto& block : cfg.families) families.push_back(to_string(block.spec.family));
    std::ofstream md(out.table_path);
    if (!md) throw io_error("cannot write '" + out.table_path + "'");

    const auto emit = [&](const std::string& title, auto metric, auto counts) {
      md << "## " << title << "\n\n";
      md << "| strategy |";
      for (const auto& f : families) md << ' ' << f << " (mean) | " << f << " (sd) |";
      md << " excluded |\n";
      md << "|---|";
      for (size_t i = 0; i < families.size(); ++i) md << "---|---|";
      md << "---|\n";
      for (const auto& st : cfg.strategies) {
        md << "| " << st.label << " |";
        long long excluded_total = 0;
        for (const auto& fam : families) {
          std::vector<double> per_seed;
          for (uint64_t seed : cfg.seeds) {
            double sum = 0.0;
            int count = 0;
            for (const auto& c : cells) {
              if (c.strategy != st.label || c.family != fam || c.seed != seed) continue;
              if (!counts(c)) {
                ++excluded_total;
                continue;
              }
              sum += metric(c);
              ++count;
            }
            if (count > 0) per_seed.push_back(sum / count);
          }
          if (per_seed.empty()) {
            md << " n/a | n/a |";
            continue;
          }
          double mean = 0.0;
          for (double v : per_seed) mean += v;
          mean /= static_cast<double>(per_seed.size());
          double var = 0.0;
          for (double v : per_seed) var += (v - mean) * (v - mean);
          const double sd =
              per_seed.size() > 1 ? std::sqrt(var / static_cast<double>(per_seed.size() - 1)) : 0.0;
          md << ' ' << format_double(mean) << " | " << format_double(sd) << " |";
        }
        md << ' ' << excluded_total << " |\n";
      }
      md << "\n";
    };

    emit("Nodes visited", [](const eval_cell& c) { return static_cast<double>(c.nodes); },
         [](const eval_cell& c) { return !c.failed; });
    emit("Solve time (s)", [](const eval_cell& c) { return c.time_s; },
         [](const eval_cell& c) { return !c.failed; });
    emit("Dual integral score", [](const eval_cell& c) { return c.score; },
         [](const eval_cell& c) { return c.has_score; });
  }

  nlohmann::json extra;
  extra["cells"] = cells.size();
  detail::write_manifest(cfg, "evaluate", cfg.paths.results, {},
                         {out.csv_path, out.table_path}, extra);
  out.cells = std::move(cells);
  return out;
}

}  // namespace lbb
