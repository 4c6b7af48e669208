// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lbb/milp.hpp"
#include "lbb/simplex.hpp"

namespace lbb {

struct brute_force_result {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Exact optimum by enumerating every integer assignment within bounds and
// solving the residual LP over the continuous variables. Test oracle only;
// cost is exponential in |I|.
inline brute_force_result brute_force_solve(const milp_instance& inst,
                                            long long box_limit = 1 << 20,
                                            int iter_limit = kDefaultLpIterLimit) {
  validate_instance(inst);
  long long combos = 1;
  for (int j : inst.integer_set) {
    if (!std::isfinite(inst.lower[j]) || !std::isfinite(inst.upper[j]))
      throw box_too_large("integer variable " + std::to_string(j) + " has infinite bounds");
    const long long range =
        static_cast<long long>(std::floor(inst.upper[j])) -
        static_cast<long long>(std::ceil(inst.lower[j])) + 1;
    if (range <= 0) return {};  // crossed integer bounds: infeasible
    combos *= range;
    if (combos > box_limit)
      throw box_too_large("enumeration of " + std::to_string(combos) + " assignments exceeds cap");
  }

  const int k = static_cast<int>(inst.integer_set.size());
  std::vector<long long> lo(k), hi(k), cur(k);
  for (int t = 0; t < k; ++t) {
    lo[t] = static_cast<long long>(std::ceil(inst.lower[inst.integer_set[t]]));
    hi[t] = static_cast<long long>(std::floor(inst.upper[inst.integer_set[t]]));
    cur[t] = lo[t];
  }

  brute_force_result best;
  std::vector<bound_delta> deltas(2 * k);
  while (true) {
    for (int t = 0; t < k; ++t) {
      const auto v = static_cast<double>(cur[t]);
      deltas[2 * t] = {inst.integer_set[t], delta_kind::lower_at_least, v};
      deltas[2 * t + 1] = {inst.integer_set[t], delta_kind::upper_at_most, v};
    }
    const lp_solution sol = lp_relax_solve(inst, deltas, iter_limit);
    if (sol.status == lp_status::optimal) {
      std::vector<double> x = sol.x;
      for (int t = 0; t < k; ++t) x[inst.integer_set[t]] = static_cast<double>(cur[t]);
      const double obj = dot(inst.objective, x);
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.x = x;
      }
    }

    int t = k - 1;
    while (t >= 0 && cur[t] == hi[t]) {
      cur[t] = lo[t];
      --t;
    }
    if (t < 0) break;
    ++cur[t];
  }
  return best;
}

}  // namespace lbb
