// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lbb/bnb.hpp"
#include "lbb/gnn.hpp"
#include "lbb/rng.hpp"

namespace lbb {

inline constexpr double kSbEpsilon = 1e-6;

// Uniform choice over the candidate set.
inline branch_decision random_select(const std::vector<int>& candidates, rng& gen) {
  if (candidates.empty()) throw empty_candidates("random_select: no branching candidates");
  return {candidates[gen.uniform_below(candidates.size())], {}};
}

// Strong-branching score of candidate j: product of the two child dual bound
// improvements, floored at kSbEpsilon; an infeasible child's improvement is
// capped instead of infinite.
inline double sb_score(branch_context& ctx, int j) {
  const double parent = ctx.node.dual_bound;
  const double cap = reward_cap(parent);
  const double fx = ctx.node.lp.x[j];
  const auto delta_of = [&](delta_kind kind, double value) {
    const lp_solution child = ctx.solve_child({j, kind, value});
    return child.status == lp_status::optimal ? child.objective - parent : cap;
  };
  const double down = delta_of(delta_kind::upper_at_most, std::floor(fx));
  const double up = delta_of(delta_kind::lower_at_least, std::ceil(fx));
  return std::max(down, kSbEpsilon) * std::max(up, kSbEpsilon);
}

// Full strong branching: score every candidate, take the argmax (ties to the
// smallest index). aux carries the full score map for data collection.
inline branch_decision fsb_select(branch_context& ctx) {
  if (ctx.node.candidates.empty()) throw empty_candidates("fsb_select: no branching candidates");
  branch_decision out;
  double best = -kInf;
  out.var = -1;
  for (int j : ctx.node.candidates) {
    const double score = sb_score(ctx, j);
    out.aux[j] = score;
    if (score > best) {
      best = score;
      out.var = j;
    }
  }
  return out;
}

// Greedy policy selection: argmax of the masked policy distribution, ties to
// the smallest index.
inline branch_decision policy_select(const bipartite_state& state, const gcnn_params& params) {
  if (state.mask_count() == 0) throw empty_candidates("policy_select: empty candidate mask");
  const forward_result fwd = gcnn_forward(state, params);
  branch_decision out;
  out.var = -1;
  double best = -kInf;
  for (int q = 0; q < state.num_vars(); ++q) {
    if (!state.mask[q]) continue;
    if (fwd.pi[q] > best) {
      best = fwd.pi[q];
      out.var = q;
    }
  }
  return out;
}

class random_brancher final : public brancher {
 public:
  explicit random_brancher(uint64_t seed) : gen_(seed) {}
  const char* name() const override { return "random"; }
  branch_decision select(branch_context& ctx) override {
    return random_select(ctx.node.candidates, gen_);
  }
  std::unique_ptr<brancher> clone() const override {
    return std::make_unique<random_brancher>(*this);
  }

 private:
  rng gen_;
};

class fsb_brancher final : public brancher {
 public:
  const char* name() const override { return "fsb"; }
  branch_decision select(branch_context& ctx) override { return fsb_select(ctx); }
  std::unique_ptr<brancher> clone() const override { return std::make_unique<fsb_brancher>(); }
};

class policy_brancher final : public brancher {
 public:
  explicit policy_brancher(std::shared_ptr<const gcnn_params> params)
      : params_(std::move(params)) {}
  const char* name() const override { return "policy"; }
  branch_decision select(branch_context& ctx) override {
    return policy_select(extract_state(ctx.node, ctx.inst), *params_);
  }
  std::unique_ptr<brancher> clone() const override {
    return std::make_unique<policy_brancher>(params_);  // params snapshot is read-only
  }

 private:
  std::shared_ptr<const gcnn_params> params_;
};

}  // namespace lbb
