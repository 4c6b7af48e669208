// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lbb/bnb.hpp"
#include "lbb/branching.hpp"
#include "lbb/dataset.hpp"
#include "lbb/gnn.hpp"

namespace lbb {

// Builds a trajectory out of the engine's expansion callbacks. Child links
// are resolved in finalize(): a child that was never expanded stays -1 and
// contributes zero to the value recursion.
class trajectory_collector final : public solve_observer {
 public:
  void on_root(const milp_instance& inst, const bnb_node& root) override {
    traj_.instance = inst.name;
    traj_.root_scale = 1.0 + std::abs(root.dual_bound);
  }

  void on_expand(const milp_instance& inst, const bnb_node& parent, const branch_decision& dec,
                 const bnb_node& left, const bnb_node& right, double reward, double) override {
    sb_sample r;
    r.state = extract_state(parent, inst);
    r.sb_scores = dec.aux;
    r.action = dec.var;
    r.reward = reward;
    r.excluded = left.lp.status != lp_status::optimal && right.lp.status != lp_status::optimal;
    const int index = static_cast<int>(traj_.records.size());
    node_to_record_[parent.id] = index;
    child_nodes_.push_back({left.id, right.id});
    traj_.records.push_back(std::move(r));
  }

  trajectory finalize() {
    for (size_t i = 0; i < traj_.records.size(); ++i) {
      auto& r = traj_.records[i];
      const auto l = node_to_record_.find(child_nodes_[i].first);
      const auto rr = node_to_record_.find(child_nodes_[i].second);
      r.left_child = l == node_to_record_.end() ? -1 : l->second;
      r.right_child = rr == node_to_record_.end() ? -1 : rr->second;
      r.is_leaf = r.left_child < 0 && r.right_child < 0;
    }
    return std::move(traj_);
  }

 private:
  trajectory traj_;
  std::map<int, int> node_to_record_;
  std::vector<std::pair<int, int>> child_nodes_;
};

// Bottom-up state values from one solve tree: V = r + gamma*(V_l + V_r)/2
// over the realized actions, zero at unexpanded children.
inline std::vector<double> value_targets_from_tree(const trajectory& traj, double gamma) {
  const size_t n = traj.records.size();
  std::vector<double> value(n, 0.0);
  std::vector<unsigned char> mark(n, 0);  // 0 new, 1 in progress, 2 done

  // iterative post-order; a back link to an in-progress record is a cycle
  for (size_t start = 0; start < n; ++start) {
    if (mark[start]) continue;
    std::vector<std::pair<size_t, int>> stack{{start, 0}};
    while (!stack.empty()) {
      auto& [i, stage] = stack.back();
      const auto& r = traj.records[i];
      if (stage == 0) {
        mark[i] = 1;
        stage = 1;
        for (int child : {r.left_child, r.right_child}) {
          if (child < 0) continue;
          if (mark[child] == 1)
            throw cyclic_tree("trajectory child links form a cycle at record " +
                              std::to_string(i));
          if (mark[child] == 0) stack.push_back({static_cast<size_t>(child), 0});
        }
      } else {
        const double vl = r.left_child >= 0 ? value[r.left_child] : 0.0;
        const double vr = r.right_child >= 0 ? value[r.right_child] : 0.0;
        value[i] = r.reward + gamma * (vl + vr) / 2.0;
        mark[i] = 2;
        stack.pop_back();
      }
    }
  }
  return value;
}

// Fills records' value_target with the tree recursion normalized by the
// per-instance root scale.
inline void fill_value_targets(trajectory& traj, double gamma) {
  const auto values = value_targets_from_tree(traj, gamma);
  for (size_t i = 0; i < traj.records.size(); ++i)
    traj.records[i].value_target = values[i] / traj.root_scale;
}

// Runs full strong branching on every instance, logging each expansion with
// its complete score map, and computes normalized value targets.
inline std::vector<trajectory> collect_sb_data(const std::vector<milp_instance>& instances,
                                               long long per_instance_node_cap, double gamma,
                                               int lp_iter_limit = kDefaultLpIterLimit) {
  std::vector<trajectory> out;
  for (const auto& inst : instances) {
    fsb_brancher strategy;
    trajectory_collector collector;
    fake_clock clock;
    bnb_limits limits;
    limits.node_limit = per_instance_node_cap;
    limits.lp_iter_limit = lp_iter_limit;
    bnb_solve(inst, strategy, limits, clock, &collector);
    trajectory traj = collector.finalize();
    fill_value_targets(traj, gamma);
    out.push_back(std::move(traj));
  }
  return out;
}

struct epoch_loss {
  double policy = 0.0;
  double value = 0.0;
};

inline double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

// Behavioral cloning of the expert actions plus value regression:
// minimizes -log pi(a|s) + (V(s) - target)^2 over the non-excluded samples.
inline std::pair<gcnn_params, std::vector<epoch_loss>> imitation_pretrain(
    const std::vector<trajectory>& data, gcnn_params params, int epochs, double lr,
    int batch_size, uint64_t seed) {
  std::vector<const sb_sample*> samples;
  for (const auto& traj : data)
    for (const auto& r : traj.records)
      if (!r.excluded) samples.push_back(&r);
  if (samples.empty()) throw empty_dataset("no usable samples after excluding flagged records");

  adam_state opt = make_adam_state(params);
  rng gen(seed);
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<epoch_loss> curve;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    gen.shuffle(order);
    epoch_loss totals;
    for (size_t begin = 0; begin < order.size(); begin += batch_size) {
      const size_t end = std::min(order.size(), begin + batch_size);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.flat.size());
      for (size_t i = begin; i < end; ++i) {
        const sb_sample& r = *samples[order[i]];
        const forward_result fwd = gcnn_forward(r.state, params);
        totals.policy += -safe_log(fwd.pi[r.action]);
        const double diff = fwd.value - r.value_target;
        totals.value += diff * diff;
        Eigen::VectorXd dpi = Eigen::VectorXd::Zero(r.state.num_vars());
        dpi[r.action] = -1.0 / std::max(fwd.pi[r.action], 1e-300);
        grad += gcnn_backward(r.state, params, fwd.trace, dpi, 2.0 * diff);
      }
      grad /= static_cast<double>(end - begin);
      adam_step(params, grad, opt, lr);
    }
    totals.policy /= static_cast<double>(samples.size());
    totals.value /= static_cast<double>(samples.size());
    curve.push_back(totals);
  }
  return {std::move(params), std::move(curve)};
}

// Samples an action from the masked policy; used for PPO rollouts so the
// collected trajectories carry exploration.
class policy_sample_brancher final : public brancher {
 public:
  policy_sample_brancher(std::shared_ptr<const gcnn_params> params, uint64_t seed)
      : params_(std::move(params)), gen_(seed) {}
  const char* name() const override { return "policy-sample"; }
  branch_decision select(branch_context& ctx) override {
    const bipartite_state state = extract_state(ctx.node, ctx.inst);
    const forward_result fwd = gcnn_forward(state, *params_);
    const double u = gen_.uniform();
    double acc = 0.0;
    int last_masked = -1;
    for (int q = 0; q < state.num_vars(); ++q) {
      if (!state.mask[q]) continue;
      last_masked = q;
      acc += fwd.pi[q];
      if (u < acc) return {q, {}};
    }
    return {last_masked, {}};  // rounding fell through; take the last candidate
  }
  std::unique_ptr<brancher> clone() const override {
    return std::make_unique<policy_sample_brancher>(*this);
  }

 private:
  std::shared_ptr<const gcnn_params> params_;
  rng gen_;
};

// One stochastic policy rollout per instance under a node cap, with
// normalized value targets filled in.
inline std::vector<trajectory> collect_policy_rollouts(
    const std::vector<milp_instance>& instances, const gcnn_params& params,
    long long per_instance_node_cap, double gamma, uint64_t seed,
    int lp_iter_limit = kDefaultLpIterLimit) {
  auto shared = std::make_shared<const gcnn_params>(params);
  const rng seed_stream(seed);
  std::vector<trajectory> out;
  for (size_t i = 0; i < instances.size(); ++i) {
    policy_sample_brancher strategy(shared, seed_stream.fork(i).seed());
    trajectory_collector collector;
    fake_clock clock;
    bnb_limits limits;
    limits.node_limit = per_instance_node_cap;
    limits.lp_iter_limit = lp_iter_limit;
    bnb_solve(instances[i], strategy, limits, clock, &collector);
    trajectory traj = collector.finalize();
    fill_value_targets(traj, gamma);
    out.push_back(std::move(traj));
  }
  return out;
}

struct ppo_config {
  double epsilon = 0.1;
  double c1 = 0.5;
  double c2 = 0.01;
  double gamma = 0.99;
  int epochs = 4;
  double lr = 1e-4;
  int batch_size = 16;
  uint64_t seed = 0;
};

struct ppo_terms {
  double surrogate = 0.0;  // clipped policy term
  double advantage = 0.0;  // value target minus value prediction
  double entropy = 0.0;    // -sum pi log pi over the mask
  double objective = 0.0;  // surrogate - c1*A^2 - c2*sum pi log pi
};

// The per-sample objective as displayed, with the advantage depending on the
// current value head. When grad is non-null, also the exact (dpi, dV) of the
// objective for the backward pass.
inline ppo_terms ppo_sample_terms(const sb_sample& r, const forward_result& fwd,
                                  double pi_old_a, const ppo_config& cfg,
                                  Eigen::VectorXd* dpi_out = nullptr,
                                  double* dvalue_out = nullptr) {
  ppo_terms t;
  t.advantage = r.value_target - fwd.value;
  const double pi_a = std::max(fwd.pi[r.action], 1e-300);
  const double ratio = pi_a / std::max(pi_old_a, 1e-300);
  const double clipped = std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
  const bool unclipped_active = ratio * t.advantage <= clipped * t.advantage;
  t.surrogate = std::min(ratio * t.advantage, clipped * t.advantage);
  double ent = 0.0;
  for (int q = 0; q < r.state.num_vars(); ++q)
    if (r.state.mask[q] && fwd.pi[q] > 0.0) ent -= fwd.pi[q] * std::log(fwd.pi[q]);
  t.entropy = ent;
  t.objective = t.surrogate - cfg.c1 * t.advantage * t.advantage + cfg.c2 * ent;

  if (dpi_out) {
    Eigen::VectorXd dpi = Eigen::VectorXd::Zero(r.state.num_vars());
    // entropy term of the objective: +c2 * H
    for (int q = 0; q < r.state.num_vars(); ++q)
      if (r.state.mask[q] && fwd.pi[q] > 0.0) dpi[q] += -cfg.c2 * (std::log(fwd.pi[q]) + 1.0);
    double dvalue = 2.0 * cfg.c1 * t.advantage;  // d(-c1 A^2)/dV, dA/dV = -1
    if (unclipped_active) {
      dpi[r.action] += t.advantage / std::max(pi_old_a, 1e-300);
      dvalue += -ratio;
    } else {
      const bool interior = ratio > 1.0 - cfg.epsilon && ratio < 1.0 + cfg.epsilon;
      if (interior) dpi[r.action] += t.advantage / std::max(pi_old_a, 1e-300);
      dvalue += -clipped;
    }
    *dpi_out = std::move(dpi);
    *dvalue_out = dvalue;
  }
  return t;
}

struct ppo_report {
  std::vector<double> epoch_objective;  // mean maximized objective per epoch
  double mean_surrogate_at_start = 0.0;
  double mean_advantage_at_start = 0.0;
};

// Proximal policy update by gradient ascent on the clipped objective. The
// incoming params are snapshotted as theta_old; any non-finite quantity
// aborts with the caller's params untouched.
inline std::pair<gcnn_params, ppo_report> ppo_update(const std::vector<trajectory>& data,
                                                     const gcnn_params& params_in,
                                                     const ppo_config& cfg) {
  std::vector<const sb_sample*> samples;
  for (const auto& traj : data)
    for (const auto& r : traj.records)
      if (!r.excluded) samples.push_back(&r);
  if (samples.empty()) throw empty_dataset("no usable samples for the policy update");

  const gcnn_params theta_old = params_in;
  gcnn_params params = params_in;

  std::vector<double> pi_old(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const forward_result fwd = gcnn_forward(samples[i]->state, theta_old);
    pi_old[i] = fwd.pi[samples[i]->action];
  }

  ppo_report report;
  {
    double sum_sur = 0.0, sum_adv = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const forward_result fwd = gcnn_forward(samples[i]->state, params);
      const ppo_terms t = ppo_sample_terms(*samples[i], fwd, pi_old[i], cfg);
      sum_sur += t.surrogate;
      sum_adv += t.advantage;
    }
    report.mean_surrogate_at_start = sum_sur / static_cast<double>(samples.size());
    report.mean_advantage_at_start = sum_adv / static_cast<double>(samples.size());
  }

  adam_state opt = make_adam_state(params);
  rng gen(cfg.seed);
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    gen.shuffle(order);
    double objective_sum = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      Eigen::VectorXd ascent = Eigen::VectorXd::Zero(params.flat.size());
      for (size_t i = begin; i < end; ++i) {
        const sb_sample& r = *samples[order[i]];
        const forward_result fwd = gcnn_forward(r.state, params);
        Eigen::VectorXd dpi;
        double dvalue = 0.0;
        const ppo_terms t = ppo_sample_terms(r, fwd, pi_old[order[i]], cfg, &dpi, &dvalue);
        if (!std::isfinite(t.objective))
          throw numerical_divergence("non-finite policy objective; update aborted");
        objective_sum += t.objective;
        ascent += gcnn_backward(r.state, params, fwd.trace, dpi, dvalue);
      }
      ascent /= static_cast<double>(end - begin);
      if (!ascent.allFinite())
        throw numerical_divergence("non-finite policy gradient; update aborted");
      Eigen::VectorXd descent = -ascent;
      adam_step(params, descent, opt, cfg.lr);
    }
    report.epoch_objective.push_back(objective_sum / static_cast<double>(samples.size()));
  }
  return {std::move(params), std::move(report)};
}

}  // namespace lbb
