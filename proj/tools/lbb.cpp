// SPDX-License-Identifier: Apache-2.0
//
// lbb: branch-and-bound MILP solving with learned variable selection.
// Stages: generate -> collect -> pretrain -> train-ppo -> refine-mcts -> evaluate.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "lbb/pipeline.hpp"

namespace {

lbb::experiment_config load(const std::string& config_path, const std::string& out_flag,
                            uint64_t seed_flag, bool seed_set) {
  std::string out_dir = out_flag;
  if (out_dir.empty()) {
    if (const char* env = std::getenv("LBB_OUT_DIR")) out_dir = env;
  }
  lbb::experiment_config cfg = lbb::load_config(config_path, out_dir);
  if (seed_set) {
    cfg.seed = seed_flag;
    cfg.raw["seed"] = seed_flag;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branch-and-bound MILP solver with learned branching"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory override (also: LBB_OUT_DIR)");
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  auto* generate = app.add_subcommand("generate", "write train/test instance files");
  auto* collect = app.add_subcommand("collect", "collect strong-branching data on the train split");
  auto* pretrain = app.add_subcommand("pretrain", "imitation-pretrain the policy/value network");
  auto* train_ppo = app.add_subcommand("train-ppo", "run proximal policy optimization rounds");
  auto* refine = app.add_subcommand("refine-mcts", "distill tree-search actions into the policy");
  auto* evaluate = app.add_subcommand("evaluate", "run the evaluation grid and write CSV/tables");
  for (auto* cmd : {generate, collect, pretrain, train_ppo, refine, evaluate}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    const lbb::experiment_config cfg = load(config_path, out_dir, seed, seed_set);
    if (generate->parsed()) {
      const auto files = lbb::cmd_generate(cfg);
      std::printf("wrote %zu instance files under %s\n", files.size(),
                  cfg.paths.instances.c_str());
    } else if (collect->parsed()) {
      const auto path = lbb::cmd_collect(cfg);
      std::printf("wrote dataset %s\n", path.c_str());
    } else if (pretrain->parsed()) {
      const auto path = lbb::cmd_pretrain(cfg);
      std::printf("wrote checkpoint %s\n", path.c_str());
    } else if (train_ppo->parsed()) {
      const auto path = lbb::cmd_train_ppo(cfg);
      std::printf("wrote checkpoint %s\n", path.c_str());
    } else if (refine->parsed()) {
      const auto path = lbb::cmd_refine_mcts(cfg);
      std::printf("wrote checkpoint %s\n", path.c_str());
    } else if (evaluate->parsed()) {
      const auto out = lbb::cmd_evaluate(cfg);
      std::printf("wrote %s and %s (%zu cells)\n", out.csv_path.c_str(), out.table_path.c_str(),
                  out.cells.size());
    }
  } catch (const lbb::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
