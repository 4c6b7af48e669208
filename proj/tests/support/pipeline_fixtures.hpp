// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace lbb::testing {

// A minutes-scale pipeline config: one small set-covering family, every
// strategy, tiny network, fake clock.
inline nlohmann::json micro_config(const std::string& out_root) {
  nlohmann::json j;
  j["seed"] = 7;
  j["clock"] = "fake";
  j["hidden"] = 8;
  j["families"] = nlohmann::json::array({{{"family", "set_covering"},
                                          {"count_train", 4},
                                          {"count_test", 2},
                                          {"params",
                                           {{"rows", 30},
                                            {"cols", 50},
                                            {"density", 0.1},
                                            {"max_cost", 5}}}}});
  j["strategies"] = nlohmann::json::array(
      {{{"name", "random"}},
       {{"name", "fsb"}},
       {{"name", "policy"}, {"label", "policy-pretrain"}, {"checkpoint", "pretrain.json"}},
       {{"name", "policy"}, {"label", "policy-refined"}, {"checkpoint", "refined.json"}},
       {{"name", "policy+mcts"},
        {"checkpoint", "refined.json"},
        {"mcts", {{"top_k", 3}, {"max_depth", 2}, {"n_sims", 12}, {"c_explore", 2.0}}}}});
  j["seeds"] = {1, 2};
  j["limits"] = {{"node_limit", 40}, {"score_T", 0.2}};
  j["training"] = {{"collect_node_cap", 25},
                   {"gamma", 0.99},
                   {"pretrain_epochs", 3},
                   {"pretrain_lr", 1e-3},
                   {"batch_size", 8},
                   {"ppo", {{"rounds", 1}, {"epochs", 2}, {"lr", 1e-4}, {"node_cap", 20}}},
                   {"mcts",
                    {{"top_k", 3},
                     {"max_depth", 2},
                     {"n_sims", 30},
                     {"c_explore", 2.0},
                     {"visit_threshold", 5},
                     {"refine_epochs", 2},
                     {"refine_lr", 1e-3},
                     {"roots_per_instance", 2}}}};
  j["paths"] = {{"instances", out_root + "/instances"},
                {"datasets", out_root + "/datasets"},
                {"checkpoints", out_root + "/checkpoints"},
                {"results", out_root + "/results"}};
  return j;
}

}  // namespace lbb::testing
