// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lbb/branching.hpp"
#include "lbb/gnn.hpp"
#include "lbb/rng.hpp"
#include "lbb/training.hpp"

namespace lbb {

struct mcts_config {
  int top_k = 10;
  int max_depth = 3;
  int n_sims = 1000;
  double c_explore = 2.0;
  double gamma = 0.99;
};

enum class branch_side { left, right };

// Q/N/prior tables of one state node, keyed by action (variable index).
struct mcts_node_stats {
  std::map<int, double> q;
  std::map<int, long long> n;
  std::map<int, double> prior;  // raw policy probabilities of the kept actions
  int depth = 0;

  long long total_visits() const {
    long long t = 0;
    for (const auto& [a, count] : n) t += count;
    return t;
  }
  // visits beyond the N=1 initialization
  long long post_init_visits() const {
    return total_visits() - static_cast<long long>(n.size());
  }
};

// Modified UCB: argmax Q + c * prior * sqrt(log(1 + sum N) / (N + 1)),
// ties to the smallest action index (map order).
inline int ucb_select(const mcts_node_stats& stats, double c_explore) {
  const double total = static_cast<double>(stats.total_visits());
  int best_action = -1;
  double best = -kInf;
  for (const auto& [a, q] : stats.q) {
    const double n_a = static_cast<double>(stats.n.at(a));
    const double bonus =
        c_explore * stats.prior.at(a) * std::sqrt(std::log(1.0 + total) / (n_a + 1.0));
    const double score = q + bonus;
    if (score > best) {
      best = score;
      best_action = a;
    }
  }
  return best_action;
}

// Feature-space surrogate of branching: no LP solve. The acted variable is
// snapped to floor (left) or ceil (right), its fractionality zeroed, the
// matching at-bound flag set, and it leaves the candidate mask.
inline bipartite_state simulate_transition(const bipartite_state& state, int action,
                                           branch_side side) {
  if (action < 0 || action >= state.num_vars() || !state.mask[action])
    throw action_not_masked("simulate_transition: action " + std::to_string(action) +
                            " is not a masked candidate");
  bipartite_state next = state;
  const double x = state.X(action, vf_lp_value);
  if (side == branch_side::left) {
    next.X(action, vf_lp_value) = std::floor(x);
    next.X(action, vf_at_lower) = 1.0;
  } else {
    next.X(action, vf_lp_value) = std::ceil(x);
    next.X(action, vf_at_upper) = 1.0;
  }
  next.X(action, vf_fractionality) = 0.0;
  next.mask[action] = 0;
  return next;
}

// Discounted-sum backup along one simulation path, then the visit count
// increments: Q += (G - Q) / (N + 1) with G the discounted tail sum of the
// evaluated next-state values.
inline void mcts_backup(std::vector<std::pair<mcts_node_stats*, int>>& path,
                        const std::vector<double>& values, double gamma) {
  const size_t steps = path.size();
  for (size_t tau = 0; tau < steps; ++tau) {
    double g = 0.0;
    double discount = 1.0;
    for (size_t t = tau; t < steps; ++t) {
      g += discount * values[t];
      discount *= gamma;
    }
    auto& [stats, action] = path[tau];
    double& q = stats->q.at(action);
    long long& n = stats->n.at(action);
    q += (-q + g) / (static_cast<double>(n) + 1.0);
    n += 1;
  }
}

// One state node visited by a search, exported for distillation.
struct mcts_visit {
  bipartite_state state;
  mcts_node_stats stats;
};

struct mcts_result {
  int best_action = -1;         // argmax Q at the root
  std::vector<mcts_visit> visits;  // every expanded node, root first
};

namespace detail {

struct mcts_tree_node {
  bipartite_state state;
  double value = 0.0;  // V(state), zero when the mask is empty
  mcts_node_stats stats;
  std::map<std::pair<int, int>, int> children;  // (action, side) -> node index
};

inline double state_value(const bipartite_state& s, const gcnn_params& params) {
  if (s.mask_count() == 0) return 0.0;  // masked sum over nothing
  return gcnn_forward(s, params).value;
}

}  // namespace detail

// Policy-guided tree search over simulated transitions. Each new node keeps
// the top-k actions by policy probability, initialized with Q = gamma * V of
// a sampled child and N = 1; simulations descend by ucb_select with sides
// drawn half/half, then back up the discounted value sums.
inline mcts_result mcts_search(const bipartite_state& root, const gcnn_params& params,
                               const mcts_config& cfg, uint64_t seed) {
  if (root.mask_count() == 0) throw empty_mask("mcts_search: root has no candidates");
  if (cfg.top_k < 1) throw bad_params("mcts_search: top_k must be >= 1");
  rng gen(seed);
  std::vector<detail::mcts_tree_node> tree;

  auto draw_side = [&] { return gen.bernoulli(0.5) ? branch_side::right : branch_side::left; };

  auto expand = [&](bipartite_state state, int depth) -> int {
    detail::mcts_tree_node node;
    node.stats.depth = depth;
    if (state.mask_count() > 0) {
      const forward_result fwd = gcnn_forward(state, params);
      node.value = fwd.value;
      std::vector<int> kept = state.masked_indices();
      std::stable_sort(kept.begin(), kept.end(),
                       [&](int a, int b) { return fwd.pi[a] > fwd.pi[b]; });
      if (static_cast<int>(kept.size()) > cfg.top_k) kept.resize(cfg.top_k);
      std::sort(kept.begin(), kept.end());
      for (int a : kept) {
        node.stats.prior[a] = fwd.pi[a];
        const bipartite_state child = simulate_transition(state, a, draw_side());
        node.stats.q[a] = cfg.gamma * detail::state_value(child, params);
        node.stats.n[a] = 1;
      }
    }
    node.state = std::move(state);
    tree.push_back(std::move(node));
    return static_cast<int>(tree.size()) - 1;
  };

  expand(root, 0);

  for (int sim = 0; sim < cfg.n_sims; ++sim) {
    std::vector<std::pair<mcts_node_stats*, int>> path;
    std::vector<int> path_nodes;
    std::vector<double> values;
    int cur = 0;
    int depth = 0;
    while (depth < cfg.max_depth && !tree[cur].stats.q.empty()) {
      const int action = ucb_select(tree[cur].stats, cfg.c_explore);
      const branch_side side = draw_side();
      const auto key = std::make_pair(action, side == branch_side::left ? 0 : 1);
      int child;
      const auto it = tree[cur].children.find(key);
      if (it != tree[cur].children.end()) {
        child = it->second;
      } else {
        child = expand(simulate_transition(tree[cur].state, action, side), depth + 1);
        tree[cur].children[key] = child;
      }
      path_nodes.push_back(cur);
      path.emplace_back(nullptr, action);  // stats pointers fixed up below
      values.push_back(tree[child].value);
      cur = child;
      ++depth;
    }
    for (size_t i = 0; i < path.size(); ++i) path[i].first = &tree[path_nodes[i]].stats;
    mcts_backup(path, values, cfg.gamma);
  }

  mcts_result out;
  double best_q = -kInf;
  for (const auto& [a, q] : tree[0].stats.q) {
    if (q > best_q) {
      best_q = q;
      out.best_action = a;
    }
  }
  out.visits.reserve(tree.size());
  for (auto& node : tree) out.visits.push_back({std::move(node.state), std::move(node.stats)});
  return out;
}

// Distills argmax-Q actions of sufficiently visited states into the policy
// network by cross-entropy. States qualify on post-initialization visits.
inline gcnn_params mcts_refine(gcnn_params params, const std::vector<mcts_visit>& visits,
                               long long visit_threshold, int epochs, double lr, int batch_size,
                               uint64_t seed) {
  struct pair_t {
    const bipartite_state* state;
    int target;
  };
  std::vector<pair_t> pairs;
  for (const auto& v : visits) {
    if (v.stats.q.empty() || v.stats.post_init_visits() < visit_threshold) continue;
    int target = -1;
    double best = -kInf;
    for (const auto& [a, q] : v.stats.q) {
      if (q > best) {
        best = q;
        target = a;
      }
    }
    pairs.push_back({&v.state, target});
  }
  if (pairs.empty())
    throw no_qualifying_states("no state reached " + std::to_string(visit_threshold) +
                               " post-initialization visits");

  adam_state opt = make_adam_state(params);
  rng gen(seed);
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    gen.shuffle(order);
    for (size_t begin = 0; begin < order.size(); begin += batch_size) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(batch_size));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.flat.size());
      for (size_t i = begin; i < end; ++i) {
        const auto& [state, target] = pairs[order[i]];
        const forward_result fwd = gcnn_forward(*state, params);
        Eigen::VectorXd dpi = Eigen::VectorXd::Zero(state->num_vars());
        dpi[target] = -1.0 / std::max(fwd.pi[target], 1e-300);
        grad += gcnn_backward(*state, params, fwd.trace, dpi, 0.0);
      }
      grad /= static_cast<double>(end - begin);
      adam_step(params, grad, opt, lr);
    }
  }
  return params;
}

// Per-node tree search at selection time, using a trained checkpoint.
class mcts_policy_brancher final : public brancher {
 public:
  mcts_policy_brancher(std::shared_ptr<const gcnn_params> params, mcts_config cfg, uint64_t seed)
      : params_(std::move(params)), cfg_(cfg), gen_(seed) {}
  const char* name() const override { return "policy+mcts"; }
  branch_decision select(branch_context& ctx) override {
    const bipartite_state state = extract_state(ctx.node, ctx.inst);
    const mcts_result r = mcts_search(state, *params_, cfg_, gen_.next_u64());
    return {r.best_action, {}};
  }
  std::unique_ptr<brancher> clone() const override {
    return std::make_unique<mcts_policy_brancher>(*this);
  }

 private:
  std::shared_ptr<const gcnn_params> params_;
  mcts_config cfg_;
  rng gen_;
};

}  // namespace lbb
