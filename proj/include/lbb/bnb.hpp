// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lbb/clock.hpp"
#include "lbb/milp.hpp"
#include "lbb/simplex.hpp"

namespace lbb {

// One node of the search tree: the root instance plus accumulated bound
// changes, with its LP relaxation result.
struct bnb_node {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::vector<bound_delta> deltas;
  lp_solution lp;
  double dual_bound = -kInf;     // lp.objective when optimal, +inf when infeasible
  std::vector<int> candidates;   // J: fractional integer variables
  bool lp_retried = false;
};

struct dual_bound_event {
  double t = 0.0;
  double z = 0.0;
};

// Timestamped global dual bound improvements; z is nondecreasing.
struct dual_bound_trace {
  std::vector<dual_bound_event> events;
};

struct incumbent_solution {
  std::vector<double> x;
  double objective = 0.0;
};

enum class solve_status { optimal, node_limit, time_limit };

inline const char* to_string(solve_status s) {
  switch (s) {
    case solve_status::optimal: return "optimal";
    case solve_status::node_limit: return "node_limit";
    case solve_status::time_limit: return "time_limit";
  }
  return "?";
}

struct node_log_entry {
  int node = 0;
  int depth = 0;
  int action = 0;
  double reward = 0.0;
  double dual_bound = 0.0;
  double t = 0.0;
};

struct solve_stats {
  long long nodes_visited = 0;
  double wall_time_s = 0.0;
  solve_status status = solve_status::optimal;
  std::optional<incumbent_solution> incumbent;
  dual_bound_trace trace;
  std::optional<std::vector<node_log_entry>> per_node_log;
  double pruned_bound_min = kInf;  // smallest dual bound among pruned nodes
};

struct bnb_limits {
  long long node_limit = std::numeric_limits<long long>::max();
  double time_limit_s = kInf;
  int lp_iter_limit = kDefaultLpIterLimit;
  bool record_per_node_log = false;
};

// A branching choice, optionally with per-candidate scores for logging.
struct branch_decision {
  int var = 0;
  std::map<int, double> aux;
};

// What a strategy sees at selection time. solve_child solves the LP of the
// current node plus one extra bound change (a strong-branching probe); the
// probe is not inserted into the tree but does advance the solve clock.
struct branch_context {
  const milp_instance& inst;
  const bnb_node& node;
  std::function<lp_solution(const bound_delta&)> solve_child;
};

class brancher {
 public:
  virtual ~brancher() = default;
  virtual const char* name() const = 0;
  virtual branch_decision select(branch_context& ctx) = 0;
  // Per-solve copy so parallel solves never share RNG state.
  virtual std::unique_ptr<brancher> clone() const = 0;
};

// Expansion callback; training data collectors hook in here.
class solve_observer {
 public:
  virtual ~solve_observer() = default;
  virtual void on_root(const milp_instance&, const bnb_node&) {}
  virtual void on_expand(const milp_instance&, const bnb_node& parent,
                         const branch_decision&, const bnb_node& left,
                         const bnb_node& right, double reward, double t) {}
};

// Cap used in place of an infeasible child's +inf bound so rewards and
// strong-branching scores stay finite.
inline double reward_cap(double parent_bound) { return 10.0 * (1.0 + std::abs(parent_bound)); }

// Local dual bound improvement of a branching: min over children of the
// child bound (infeasible children capped) minus the parent bound.
inline double local_reward(const bnb_node& parent, const bnb_node& left, const bnb_node& right) {
  const double cap = parent.dual_bound + reward_cap(parent.dual_bound);
  const double lb = left.lp.status == lp_status::optimal ? left.dual_bound : cap;
  const double rb = right.lp.status == lp_status::optimal ? right.dual_bound : cap;
  return std::min(lb, rb) - parent.dual_bound;
}

// Best-bound node selection with FIFO tie-break: minimal dual bound, then
// smallest id. Returns the index into `open`.
inline size_t select_next_node(const std::vector<bnb_node>& open) {
  size_t best = 0;
  for (size_t i = 1; i < open.size(); ++i) {
    if (open[i].dual_bound < open[best].dual_bound ||
        (open[i].dual_bound == open[best].dual_bound && open[i].id < open[best].id))
      best = i;
  }
  return best;
}

// Creates the two children of `parent` branched on variable j (floor/ceil of
// the fractional LP value) and solves their LPs. An iteration-limited child
// inherits the parent bound and is re-solved when selected.
inline std::pair<bnb_node, bnb_node> apply_branch(const milp_instance& inst,
                                                  const bnb_node& parent, int j,
                                                  int iter_limit = kDefaultLpIterLimit,
                                                  solve_clock* clock = nullptr) {
  const double fx = parent.lp.x[j];
  auto make_child = [&](delta_kind kind, double value) {
    bnb_node child;
    child.parent = parent.id;
    child.depth = parent.depth + 1;
    child.deltas = parent.deltas;
    child.deltas.push_back({j, kind, value});
    child.lp = lp_relax_solve(inst, child.deltas, iter_limit);
    if (clock) clock->on_lp_solved();
    switch (child.lp.status) {
      case lp_status::optimal:
        child.dual_bound = child.lp.objective;
        child.candidates = fractional_candidates(child.lp.x, inst.integer_set);
        break;
      case lp_status::infeasible: child.dual_bound = kInf; break;
      case lp_status::iteration_limit: child.dual_bound = parent.dual_bound; break;
      case lp_status::unbounded:
        throw solve_aborted("child LP relaxation unbounded on '" + inst.name + "'");
    }
    return child;
  };
  return {make_child(delta_kind::upper_at_most, std::floor(fx)),
          make_child(delta_kind::lower_at_least, std::ceil(fx))};
}

// Exact step integral of the dual bound over [0, T] (right-continuous,
// holding the last value), shifted by the optimum: -T*opt + integral(z).
inline double dual_integral_score(const dual_bound_trace& trace, double T, double opt_objective) {
  if (trace.events.empty()) throw empty_trace("dual bound trace has no events");
  double integral = 0.0;
  const size_t n = trace.events.size();
  for (size_t i = 0; i < n; ++i) {
    const double t0 = std::min(trace.events[i].t, T);
    const double t1 = i + 1 < n ? std::min(trace.events[i + 1].t, T) : T;
    if (t1 > t0) integral += trace.events[i].z * (t1 - t0);
  }
  return -T * opt_objective + integral;
}

// Branch and bound with best-bound node selection. Terminates with status
// optimal when the open set empties, otherwise at the binding limit.
inline solve_stats bnb_solve(const milp_instance& inst, brancher& strategy,
                             const bnb_limits& limits, solve_clock& clock,
                             solve_observer* observer = nullptr) {
  const double t_start = clock.now();
  solve_stats stats;
  if (limits.record_per_node_log) stats.per_node_log.emplace();

  std::vector<bnb_node> nodes;
  std::set<std::pair<double, int>> open;  // (dual bound, id): best bound, FIFO ties

  const auto incumbent_obj = [&] {
    return stats.incumbent ? stats.incumbent->objective : kInf;
  };

  auto update_incumbent = [&](const bnb_node& n) {
    std::vector<double> x = n.lp.x;
    for (int j : inst.integer_set) x[j] = std::round(x[j]);
    const double obj = dot(inst.objective, x);
    if (!stats.incumbent || obj < stats.incumbent->objective)
      stats.incumbent = incumbent_solution{std::move(x), obj};
  };

  auto record_bound = [&](double t_now) {
    double z = stats.incumbent ? stats.incumbent->objective : kInf;
    if (!open.empty()) z = std::min(z, open.begin()->first);
    if (!std::isfinite(z)) return;
    if (stats.trace.events.empty() || z > stats.trace.events.back().z)
      stats.trace.events.push_back({t_now, z});
  };

  auto resolve_lp = [&](std::vector<bound_delta>& deltas, int factor) {
    lp_solution s = lp_relax_solve(inst, deltas, limits.lp_iter_limit * factor);
    clock.on_lp_solved();
    return s;
  };

  // root
  {
    bnb_node root;
    root.id = 0;
    root.lp = resolve_lp(root.deltas, 1);
    if (root.lp.status == lp_status::iteration_limit) {
      root.lp = resolve_lp(root.deltas, 4);
      if (root.lp.status == lp_status::iteration_limit)
        throw solve_aborted("root LP exceeded the iteration limit twice on '" + inst.name + "'");
    }
    if (root.lp.status == lp_status::unbounded)
      throw solve_aborted("root LP relaxation unbounded on '" + inst.name + "'");
    stats.nodes_visited = 1;
    if (root.lp.status == lp_status::optimal) {
      root.dual_bound = root.lp.objective;
      root.candidates = fractional_candidates(root.lp.x, inst.integer_set);
      stats.trace.events.push_back({0.0, root.dual_bound});
      if (observer) observer->on_root(inst, root);
      if (root.candidates.empty()) {
        update_incumbent(root);
      } else {
        open.insert({root.dual_bound, 0});
      }
    } else {
      root.dual_bound = kInf;  // infeasible: the MILP has no solution
    }
    nodes.push_back(std::move(root));
  }

  while (!open.empty()) {
    if (stats.nodes_visited >= limits.node_limit) {
      stats.status = solve_status::node_limit;
      break;
    }
    if (clock.now() - t_start >= limits.time_limit_s) {
      stats.status = solve_status::time_limit;
      break;
    }

    const auto [bound, id] = *open.begin();
    open.erase(open.begin());

    if (nodes[id].dual_bound >= incumbent_obj() - 1e-9) {
      stats.pruned_bound_min = std::min(stats.pruned_bound_min, nodes[id].dual_bound);
      continue;
    }

    if (nodes[id].lp.status == lp_status::iteration_limit) {
      // unsolved node carried the parent bound; one re-solve with 4x budget
      if (nodes[id].lp_retried)
        throw solve_aborted("node LP exceeded the iteration limit twice on '" + inst.name + "'");
      nodes[id].lp = resolve_lp(nodes[id].deltas, 4);
      nodes[id].lp_retried = true;
      if (nodes[id].lp.status == lp_status::iteration_limit)
        throw solve_aborted("node LP exceeded the iteration limit twice on '" + inst.name + "'");
      if (nodes[id].lp.status == lp_status::unbounded)
        throw solve_aborted("node LP relaxation unbounded on '" + inst.name + "'");
      if (nodes[id].lp.status == lp_status::infeasible) continue;
      nodes[id].dual_bound = nodes[id].lp.objective;
      nodes[id].candidates = fractional_candidates(nodes[id].lp.x, inst.integer_set);
      if (nodes[id].candidates.empty()) {
        update_incumbent(nodes[id]);
      } else {
        open.insert({nodes[id].dual_bound, id});
      }
      record_bound(clock.now() - t_start);
      continue;
    }

    // expand
    branch_context ctx{inst, nodes[id], [&, id](const bound_delta& extra) {
                         std::vector<bound_delta> probe = nodes[id].deltas;
                         probe.push_back(extra);
                         lp_solution s = resolve_lp(probe, 1);
                         if (s.status == lp_status::iteration_limit) {
                           s = resolve_lp(probe, 4);
                           if (s.status == lp_status::iteration_limit)
                             throw solve_aborted("strong-branching probe exceeded the iteration limit twice");
                         }
                         return s;
                       }};
    const branch_decision decision = strategy.select(ctx);

    auto [left, right] = apply_branch(inst, nodes[id], decision.var, limits.lp_iter_limit, &clock);
    stats.nodes_visited += 2;
    const int left_id = static_cast<int>(nodes.size());
    const int right_id = left_id + 1;
    left.id = left_id;
    right.id = right_id;
    const double reward = local_reward(nodes[id], left, right);
    const double t_now = clock.now() - t_start;

    if (stats.per_node_log)
      stats.per_node_log->push_back(
          {id, nodes[id].depth, decision.var, reward, nodes[id].dual_bound, t_now});
    if (observer)
      observer->on_expand(inst, nodes[id], decision, left, right, reward, t_now);

    for (bnb_node* child : {&left, &right}) {
      if (child->lp.status == lp_status::optimal && child->candidates.empty()) {
        update_incumbent(*child);
      } else if (std::isfinite(child->dual_bound)) {
        open.insert({child->dual_bound, child->id});
      } else {
        stats.pruned_bound_min = std::min(stats.pruned_bound_min, child->dual_bound);
      }
    }
    nodes.push_back(std::move(left));
    nodes.push_back(std::move(right));

    record_bound(t_now);
  }

  if (open.empty()) stats.status = solve_status::optimal;
  record_bound(clock.now() - t_start);
  stats.wall_time_s = clock.now() - t_start;
  return stats;
}

}  // namespace lbb
