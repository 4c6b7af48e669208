// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "lbb/branching.hpp"
#include "support/test_oracles.hpp"

using namespace lbb;

namespace {

// branch context over a real instance with probe solves wired up
struct probe_fixture {
  milp_instance inst;
  bnb_node node;
  branch_context ctx;

  explicit probe_fixture(milp_instance instance)
      : inst(std::move(instance)),
        node(),
        ctx{inst, node, [this](const bound_delta& d) {
              auto deltas = node.deltas;
              deltas.push_back(d);
              return lp_relax_solve(inst, deltas);
            }} {
    node.lp = lp_relax_solve(inst);
    REQUIRE(node.lp.status == lp_status::optimal);
    node.dual_bound = node.lp.objective;
    node.candidates = fractional_candidates(node.lp.x, inst.integer_set);
  }
};

// minimal exhaustive search: smallest achievable complete tree size when
// every node may pick its best candidate (no pruning, no bound cutoffs);
// -1 when the tree does not bottom out within the depth cap
long min_tree_size(const milp_instance& inst, const bnb_node& node, int depth_left) {
  if (node.lp.status != lp_status::optimal) return 1;
  if (node.candidates.empty()) return 1;
  if (depth_left == 0) return -1;
  long best = std::numeric_limits<long>::max();
  for (int j : node.candidates) {
    const auto [left, right] = apply_branch(inst, node, j);
    const long l = min_tree_size(inst, left, depth_left - 1);
    const long r = min_tree_size(inst, right, depth_left - 1);
    if (l < 0 || r < 0) return -1;
    best = std::min(best, 1 + l + r);
  }
  return best;
}

}  // namespace

TEST_CASE("random_select is uniform, seeded, and total") {
  rng gen(9);
  SECTION("singleton") { CHECK(random_select({7}, gen).var == 7); }
  SECTION("frequencies over 40000 draws stay near 1/4") {
    const std::vector<int> candidates{1, 2, 3, 4};
    std::map<int, int> counts;
    for (int i = 0; i < 40000; ++i) ++counts[random_select(candidates, gen).var];
    for (int j : candidates) {
      const double freq = counts[j] / 40000.0;
      CHECK(freq >= 0.24);
      CHECK(freq <= 0.26);
    }
  }
  SECTION("same seed, same decisions") {
    rng a(33), b(33);
    for (int i = 0; i < 100; ++i)
      CHECK(random_select({2, 4, 6, 8}, a).var == random_select({2, 4, 6, 8}, b).var);
  }
  SECTION("empty candidate set throws") {
    CHECK_THROWS_AS(random_select({}, gen), empty_candidates);
  }
}

TEST_CASE("sb_score is the epsilon-floored product of child improvements") {
  // min -x - y, x + y <= 1.5, 0 <= x,y <= 1 integer: branching either var
  // gives children with bounds -1.5 (continuous sibling) and -2? computeanalytically:
  milp_instance inst;
  inst.num_vars = 2;
  inst.num_cons = 1;
  inst.objective = {-1.0, -1.0};
  inst.rows = {{0, 0, 1.0}, {0, 1, 1.0}};
  inst.rhs = {1.5};
  inst.lower = {0.0, 0.0};
  inst.upper = {1.0, 1.0};
  inst.integer_set = {0, 1};
  probe_fixture fx(std::move(inst));

  // the root LP sits at a vertex with one variable integral and the other at
  // 0.5, z = -1.5. Fixing the fractional one to 0 gives z = -1 (delta 0.5);
  // fixing it to 1 gives z = -1.5 (delta 0): score = max(.5,eps)*max(0,eps).
  REQUIRE(fx.node.candidates.size() == 1);
  const double score = sb_score(fx.ctx, fx.node.candidates.front());
  CHECK_THAT(score, Catch::Matchers::WithinAbs(0.5 * kSbEpsilon, 1e-15));
}

TEST_CASE("sb_score floors a zero improvement at epsilon") {
  // direct arithmetic on the formula via a crafted context is covered above;
  // here both deltas positive: parent 2.0 with child bounds 4.0 and 5.0
  bnb_node parent;
  parent.dual_bound = 2.0;
  parent.lp.status = lp_status::optimal;
  parent.lp.x = {0.5};
  parent.candidates = {0};
  milp_instance dummy;
  int calls = 0;
  branch_context ctx{dummy, parent, [&](const bound_delta&) {
                       lp_solution s;
                       s.status = lp_status::optimal;
                       s.objective = ++calls == 1 ? 4.0 : 5.0;
                       return s;
                     }};
  CHECK_THAT(sb_score(ctx, 0), Catch::Matchers::WithinAbs(6.0, 1e-12));
}

TEST_CASE("infeasible probe child is capped in the score") {
  bnb_node parent;
  parent.dual_bound = 2.0;
  parent.lp.status = lp_status::optimal;
  parent.lp.x = {0.5};
  parent.candidates = {0};
  milp_instance dummy;
  int calls = 0;
  branch_context ctx{dummy, parent, [&](const bound_delta&) {
                       lp_solution s;
                       if (++calls == 1) {
                         s.status = lp_status::infeasible;
                       } else {
                         s.status = lp_status::optimal;
                         s.objective = 5.0;
                       }
                       return s;
                     }};
  // cap = 10*(1+|2|) = 30: score = max(30,eps)*max(3,eps) = 90
  CHECK_THAT(sb_score(ctx, 0), Catch::Matchers::WithinAbs(90.0, 1e-12));
}

TEST_CASE("fsb_select takes the argmax and carries all scores") {
  rng gen(512);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_tiny_milp(gen);
    const auto lp = lp_relax_solve(inst);
    if (lp.status != lp_status::optimal) continue;
    const auto J = fractional_candidates(lp.x, inst.integer_set);
    if (J.empty()) continue;
    probe_fixture fx(inst);
    const auto decision = fsb_select(fx.ctx);
    REQUIRE(decision.aux.size() == J.size());
    double best = -kInf;
    int best_j = -1;
    for (int j : J) {  // ascending: ties resolve to the smallest index
      const double s = decision.aux.at(j);
      if (s > best) {
        best = s;
        best_j = j;
      }
    }
    CHECK(decision.var == best_j);
  }
}

TEST_CASE("fsb determinism: identical node, identical decision") {
  rng gen(77);
  const auto inst = testing::random_tiny_milp(gen);
  const auto lp = lp_relax_solve(inst);
  if (lp.status != lp_status::optimal) return;
  if (fractional_candidates(lp.x, inst.integer_set).empty()) return;
  probe_fixture a(inst), b(inst);
  CHECK(fsb_select(a.ctx).var == fsb_select(b.ctx).var);
}

TEST_CASE("sb argmax tracks the minimal-tree oracle on tiny instances") {
  // exhaustive oracle: smallest complete tree over every branching sequence.
  // Strong branching is exact on most of these tiny instances; it must pick
  // a tree-size-minimizing candidate on a clear majority of them.
  rng gen(14);
  int agree = 0, total = 0;
  while (total < 12) {
    const auto inst = testing::random_tiny_milp(gen, 5, 4);
    const auto lp = lp_relax_solve(inst);
    if (lp.status != lp_status::optimal) continue;
    if (fractional_candidates(lp.x, inst.integer_set).size() < 2) continue;
    probe_fixture fx(inst);
    long best_total = std::numeric_limits<long>::max();
    std::map<int, long> totals;
    bool fits = true;
    for (int j : fx.node.candidates) {
      const auto [left, right] = apply_branch(inst, fx.node, j);
      const long l = min_tree_size(inst, left, 4);
      const long r = min_tree_size(inst, right, 4);
      if (l < 0 || r < 0) {
        fits = false;
        break;
      }
      totals[j] = 1 + l + r;
      best_total = std::min(best_total, totals[j]);
    }
    if (!fits) continue;
    const auto decision = fsb_select(fx.ctx);
    agree += totals.at(decision.var) == best_total;
    ++total;
  }
  CHECK(agree >= (2 * total) / 3);
}

TEST_CASE("policy_select follows the masked distribution argmax") {
  rng gen(5150);
  const auto params = init_params(21, 8);
  const auto state = testing::random_state(gen, 6, 4, 10);
  const auto fwd = gcnn_forward(state, params);
  const auto decision = policy_select(state, params);
  double best = -1.0;
  int best_q = -1;
  for (int q = 0; q < state.num_vars(); ++q) {
    if (!state.mask[q]) continue;
    if (fwd.pi[q] > best) {
      best = fwd.pi[q];
      best_q = q;
    }
  }
  CHECK(decision.var == best_q);
}

TEST_CASE("zero params give a uniform policy and the smallest candidate") {
  rng gen(31);
  auto state = testing::random_state(gen, 5, 3, 8);
  state.mask = {0, 1, 1, 0, 1};
  const auto params = zero_params(8);
  const auto fwd = gcnn_forward(state, params);
  CHECK_THAT(fwd.pi[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  CHECK_THAT(fwd.pi[2], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  CHECK(policy_select(state, params).var == 1);
}

TEST_CASE("strategy totality on nonempty candidate sets") {
  rng gen(606060);
  const auto params = std::make_shared<const gcnn_params>(init_params(2, 8));
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_tiny_milp(gen);
    const auto lp = lp_relax_solve(inst);
    if (lp.status != lp_status::optimal) continue;
    if (fractional_candidates(lp.x, inst.integer_set).empty()) continue;
    probe_fixture fx(inst);
    const auto in_j = [&](int j) {
      return std::find(fx.node.candidates.begin(), fx.node.candidates.end(), j) !=
             fx.node.candidates.end();
    };
    rng r(trial);
    CHECK(in_j(random_select(fx.node.candidates, r).var));
    CHECK(in_j(fsb_select(fx.ctx).var));
    CHECK(in_j(policy_select(extract_state(fx.node, inst), *params).var));
  }
}
