// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "lbb/errors.hpp"

namespace lbb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kFeasTol = 1e-6;
inline constexpr double kIntTol = 1e-6;
inline constexpr double kPivotTol = 1e-9;

struct sparse_entry {
  int row = 0;
  int col = 0;
  double value = 0.0;

  bool operator==(const sparse_entry&) const = default;
};

// Canonical minimization MILP: min c.x s.t. A x <= b, l <= x <= u,
// x_i integral for i in I.
struct milp_instance {
  int num_vars = 0;
  int num_cons = 0;
  std::vector<double> objective;        // length num_vars
  std::vector<sparse_entry> rows;       // row-major sorted (row, col)
  std::vector<double> rhs;              // length num_cons
  std::vector<double> lower;            // -inf allowed
  std::vector<double> upper;            // +inf allowed
  std::vector<int> integer_set;         // strictly increasing
  std::string name;
  bool sense_flipped = false;           // objective was negated from a max problem

  // provenance, carried into the instance file
  std::string family = "custom";
  uint64_t seed = 0;

  bool operator==(const milp_instance&) const = default;
};

enum class row_sense { less_equal, greater_equal, equal };
enum class objective_sense { minimize, maximize };

// A general MILP as produced by generators or external input, before
// canonicalization.
struct raw_milp {
  int num_vars = 0;
  objective_sense sense = objective_sense::minimize;
  std::vector<double> objective;
  std::vector<sparse_entry> rows;
  std::vector<row_sense> row_senses;  // one per constraint row
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> integer_set;
  std::string name;
};

enum class lp_status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(lp_status s) {
  switch (s) {
    case lp_status::optimal: return "optimal";
    case lp_status::infeasible: return "infeasible";
    case lp_status::unbounded: return "unbounded";
    case lp_status::iteration_limit: return "iteration_limit";
  }
  return "?";
}

struct lp_solution {
  lp_status status = lp_status::infeasible;
  std::vector<double> x;      // valid iff optimal
  double objective = 0.0;     // valid iff optimal
  std::vector<double> duals;  // one per row, valid iff optimal
  int iterations = 0;
};

enum class delta_kind { upper_at_most, lower_at_least };

// One branching bound change: x_j <= value or x_j >= value.
struct bound_delta {
  int var = 0;
  delta_kind kind = delta_kind::upper_at_most;
  double value = 0.0;

  bool operator==(const bound_delta&) const = default;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Variable bounds of `inst` tightened by `deltas` in order.
inline void effective_bounds(const milp_instance& inst,
                             const std::vector<bound_delta>& deltas,
                             std::vector<double>& lo, std::vector<double>& hi) {
  lo = inst.lower;
  hi = inst.upper;
  for (const auto& d : deltas) {
    if (d.kind == delta_kind::upper_at_most)
      hi[d.var] = std::min(hi[d.var], d.value);
    else
      lo[d.var] = std::max(lo[d.var], d.value);
  }
}

inline void validate_instance(const milp_instance& inst) {
  if (inst.num_vars < 0 || inst.num_cons < 0)
    throw malformed_instance("negative dimensions in instance '" + inst.name + "'");
  if (static_cast<int>(inst.objective.size()) != inst.num_vars ||
      static_cast<int>(inst.rhs.size()) != inst.num_cons ||
      static_cast<int>(inst.lower.size()) != inst.num_vars ||
      static_cast<int>(inst.upper.size()) != inst.num_vars)
    throw malformed_instance("vector length mismatch in instance '" + inst.name + "'");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : inst.rows) {
    if (e.row < 0 || e.row >= inst.num_cons || e.col < 0 || e.col >= inst.num_vars)
      throw malformed_instance("sparse entry out of range in instance '" + inst.name + "'");
    if (!seen.insert({e.row, e.col}).second)
      throw malformed_instance("duplicate sparse entry (" + std::to_string(e.row) + "," +
                               std::to_string(e.col) + ") in instance '" + inst.name + "'");
  }
  for (int j = 0; j < inst.num_vars; ++j) {
    if (std::isfinite(inst.lower[j]) && std::isfinite(inst.upper[j]) &&
        inst.lower[j] > inst.upper[j])
      throw malformed_instance("crossed bounds on variable " + std::to_string(j));
  }
  int prev = -1;
  for (int i : inst.integer_set) {
    if (i <= prev || i >= inst.num_vars)
      throw malformed_instance("integer set not strictly increasing / out of range");
    prev = i;
  }
}

// Canonicalizes a general MILP: max -> min (objective negated, flag set),
// >= rows negated into <=, = rows split into a <= pair.
inline milp_instance normalize_instance(const raw_milp& raw) {
  if (raw.num_vars < 0) throw malformed_instance("negative num_vars");
  const size_t m = raw.row_senses.size();
  if (raw.rhs.size() != m) throw malformed_instance("rhs/sense length mismatch");
  for (const auto& e : raw.rows) {
    if (e.row < 0 || e.row >= static_cast<int>(m) || e.col < 0 || e.col >= raw.num_vars)
      throw malformed_instance("sparse entry out of range in '" + raw.name + "'");
  }

  milp_instance inst;
  inst.num_vars = raw.num_vars;
  inst.name = raw.name;
  inst.lower = raw.lower;
  inst.upper = raw.upper;
  inst.integer_set = raw.integer_set;
  inst.sense_flipped = raw.sense == objective_sense::maximize;
  inst.objective = raw.objective;
  if (inst.sense_flipped)
    for (auto& c : inst.objective) c = -c;

  // map each raw row to one or two canonical <= rows
  std::vector<std::pair<int, int>> out_rows(m);  // (primary index, optional second or -1)
  int next = 0;
  for (size_t i = 0; i < m; ++i) {
    out_rows[i].first = next++;
    out_rows[i].second = raw.row_senses[i] == row_sense::equal ? next++ : -1;
  }
  inst.num_cons = next;
  inst.rhs.assign(next, 0.0);
  for (size_t i = 0; i < m; ++i) {
    switch (raw.row_senses[i]) {
      case row_sense::less_equal: inst.rhs[out_rows[i].first] = raw.rhs[i]; break;
      case row_sense::greater_equal: inst.rhs[out_rows[i].first] = -raw.rhs[i]; break;
      case row_sense::equal:
        inst.rhs[out_rows[i].first] = raw.rhs[i];
        inst.rhs[out_rows[i].second] = -raw.rhs[i];
        break;
    }
  }
  for (const auto& e : raw.rows) {
    const auto& [primary, second] = out_rows[e.row];
    switch (raw.row_senses[e.row]) {
      case row_sense::less_equal:
        inst.rows.push_back({primary, e.col, e.value});
        break;
      case row_sense::greater_equal:
        inst.rows.push_back({primary, e.col, -e.value});
        break;
      case row_sense::equal:
        inst.rows.push_back({primary, e.col, e.value});
        inst.rows.push_back({second, e.col, -e.value});
        break;
    }
  }
  std::sort(inst.rows.begin(), inst.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  validate_instance(inst);
  return inst;
}

// Branching candidates: integer variables whose LP value is fractional
// beyond int_tol. Sorted ascending.
inline std::vector<int> fractional_candidates(const std::vector<double>& x,
                                              const std::vector<int>& integer_set,
                                              double int_tol = kIntTol) {
  std::vector<int> out;
  for (int i : integer_set) {
    if (std::abs(x[i] - std::round(x[i])) > int_tol) out.push_back(i);
  }
  return out;
}

}  // namespace lbb
