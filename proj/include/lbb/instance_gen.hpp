// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "lbb/milp.hpp"
#include "lbb/rng.hpp"

namespace lbb {

enum class family_kind {
  set_covering,
  combinatorial_auction,
  capacitated_facility_location,
  maximum_independent_set,
};

inline const char* to_string(family_kind f) {
  switch (f) {
    case family_kind::set_covering: return "set_covering";
    case family_kind::combinatorial_auction: return "combinatorial_auction";
    case family_kind::capacitated_facility_location: return "capacitated_facility_location";
    case family_kind::maximum_independent_set: return "maximum_independent_set";
  }
  return "?";
}

inline family_kind family_from_string(const std::string& s) {
  if (s == "set_covering") return family_kind::set_covering;
  if (s == "combinatorial_auction") return family_kind::combinatorial_auction;
  if (s == "capacitated_facility_location") return family_kind::capacitated_facility_location;
  if (s == "maximum_independent_set") return family_kind::maximum_independent_set;
  throw bad_params("unknown family '" + s + "'");
}

// Desk-scale defaults; the paper-scale sizes stay reachable through config.
struct set_covering_params {
  int rows = 100;
  int cols = 200;
  double density = 0.05;
  int max_cost = 5;
};
struct combinatorial_auction_params {
  int items = 30;
  int bids = 60;
  double add_prob = 0.7;
};
struct facility_location_params {
  int facilities = 15;
  int customers = 15;
  double capacity_ratio = 2.0;
};
struct independent_set_params {
  int nodes = 60;
  int affinity = 4;
};

struct family_spec {
  family_kind family = family_kind::set_covering;
  std::variant<set_covering_params, combinatorial_auction_params, facility_location_params,
               independent_set_params>
      params = set_covering_params{};
  uint64_t seed = 0;
};

namespace detail {

// Min-cost cover of every row by binary column selections. Each (row, col)
// pair is covered independently with probability `density`, then repaired so
// every column covers >= 1 row and every row has >= 2 covering columns.
inline milp_instance gen_set_covering(const set_covering_params& p, uint64_t seed) {
  if (p.rows < 1 || p.cols < 2 || !(p.density > 0.0 && p.density < 1.0) || p.max_cost < 1)
    throw bad_params("set_covering: need rows >= 1, cols >= 2, density in (0,1), max_cost >= 1");
  rng gen(seed);
  std::vector<std::vector<char>> covers(p.rows, std::vector<char>(p.cols, 0));
  for (int i = 0; i < p.rows; ++i)
    for (int j = 0; j < p.cols; ++j) covers[i][j] = gen.bernoulli(p.density) ? 1 : 0;
  for (int j = 0; j < p.cols; ++j) {
    bool any = false;
    for (int i = 0; i < p.rows && !any; ++i) any = covers[i][j];
    if (!any) covers[gen.uniform_int(0, p.rows - 1)][j] = 1;
  }
  for (int i = 0; i < p.rows; ++i) {
    int count = 0;
    for (int j = 0; j < p.cols; ++j) count += covers[i][j];
    while (count < 2) {
      const int j = static_cast<int>(gen.uniform_int(0, p.cols - 1));
      if (!covers[i][j]) {
        covers[i][j] = 1;
        ++count;
      }
    }
  }

  raw_milp raw;
  raw.num_vars = p.cols;
  raw.sense = objective_sense::minimize;
  raw.objective.resize(p.cols);
  for (int j = 0; j < p.cols; ++j)
    raw.objective[j] = static_cast<double>(gen.uniform_int(1, p.max_cost));
  raw.lower.assign(p.cols, 0.0);
  raw.upper.assign(p.cols, 1.0);
  raw.integer_set.resize(p.cols);
  for (int j = 0; j < p.cols; ++j) raw.integer_set[j] = j;
  raw.row_senses.assign(p.rows, row_sense::greater_equal);
  raw.rhs.assign(p.rows, 1.0);
  for (int i = 0; i < p.rows; ++i)
    for (int j = 0; j < p.cols; ++j)
      if (covers[i][j]) raw.rows.push_back({i, j, 1.0});
  return normalize_instance(raw);
}

// Winner determination: maximize accepted bid prices, each item sold at most
// once. Bundles grow by a seeded random walk over items; the bid price is
// the bundle's private value with multiplicative noise.
inline milp_instance gen_combinatorial_auction(const combinatorial_auction_params& p,
                                               uint64_t seed) {
  if (p.items < 1 || p.bids < 1 || p.add_prob < 0.0 || p.add_prob >= 1.0)
    throw bad_params("combinatorial_auction: need items >= 1, bids >= 1, add_prob in [0,1)");
  rng gen(seed);
  std::vector<double> value(p.items);
  for (auto& v : value) v = gen.uniform(1.0, 100.0);

  raw_milp raw;
  raw.num_vars = p.bids;
  raw.sense = objective_sense::maximize;
  raw.objective.resize(p.bids);
  raw.lower.assign(p.bids, 0.0);
  raw.upper.assign(p.bids, 1.0);
  raw.integer_set.resize(p.bids);
  for (int b = 0; b < p.bids; ++b) raw.integer_set[b] = b;
  raw.row_senses.assign(p.items, row_sense::less_equal);
  raw.rhs.assign(p.items, 1.0);

  for (int b = 0; b < p.bids; ++b) {
    std::vector<int> remaining(p.items);
    for (int i = 0; i < p.items; ++i) remaining[i] = i;
    std::vector<int> bundle;
    double total = 0.0;
    do {
      const size_t pick = static_cast<size_t>(gen.uniform_below(remaining.size()));
      bundle.push_back(remaining[pick]);
      total += value[remaining[pick]];
      remaining.erase(remaining.begin() + static_cast<long>(pick));
    } while (!remaining.empty() && gen.bernoulli(p.add_prob));
    std::sort(bundle.begin(), bundle.end());
    for (int item : bundle) raw.rows.push_back({item, b, 1.0});
    raw.objective[b] = total * (1.0 + gen.uniform(-0.1, 0.1));
  }
  return normalize_instance(raw);
}

// Open facilities and split customer demand among them: binary open
// decisions, continuous assignment fractions, capacity and linking rows.
inline milp_instance gen_facility_location(const facility_location_params& p, uint64_t seed) {
  if (p.facilities < 1 || p.customers < 1 || p.capacity_ratio < 1.0)
    throw bad_params(
        "capacitated_facility_location: need facilities >= 1, customers >= 1, "
        "capacity_ratio >= 1");
  rng gen(seed);
  const int F = p.facilities, K = p.customers;
  std::vector<double> demand(K);
  double total_demand = 0.0;
  for (auto& d : demand) {
    d = static_cast<double>(gen.uniform_int(5, 35));
    total_demand += d;
  }
  const double capacity = std::ceil(p.capacity_ratio * total_demand / F);
  std::vector<double> fx(F), fy(F), open_cost(F);
  for (int i = 0; i < F; ++i) {
    fx[i] = gen.uniform(0.0, 1.0);
    fy[i] = gen.uniform(0.0, 1.0);
    open_cost[i] = static_cast<double>(gen.uniform_int(100, 300));
  }
  std::vector<double> cx(K), cy(K);
  for (int k = 0; k < K; ++k) {
    cx[k] = gen.uniform(0.0, 1.0);
    cy[k] = gen.uniform(0.0, 1.0);
  }

  const auto zvar = [&](int i, int k) { return F + i * K + k; };
  raw_milp raw;
  raw.num_vars = F + F * K;
  raw.sense = objective_sense::minimize;
  raw.objective.assign(raw.num_vars, 0.0);
  raw.lower.assign(raw.num_vars, 0.0);
  raw.upper.assign(raw.num_vars, 1.0);
  raw.integer_set.resize(F);
  for (int i = 0; i < F; ++i) {
    raw.integer_set[i] = i;
    raw.objective[i] = open_cost[i];
  }
  for (int i = 0; i < F; ++i)
    for (int k = 0; k < K; ++k) {
      const double dist = std::hypot(fx[i] - cx[k], fy[i] - cy[k]);
      raw.objective[zvar(i, k)] = 10.0 * dist * demand[k];
    }

  // rows: K demand equalities, F capacities, F*K linking
  int row = 0;
  for (int k = 0; k < K; ++k, ++row) {
    raw.row_senses.push_back(row_sense::equal);
    raw.rhs.push_back(1.0);
    for (int i = 0; i < F; ++i) raw.rows.push_back({row, zvar(i, k), 1.0});
  }
  for (int i = 0; i < F; ++i, ++row) {
    raw.row_senses.push_back(row_sense::less_equal);
    raw.rhs.push_back(0.0);
    for (int k = 0; k < K; ++k) raw.rows.push_back({row, zvar(i, k), demand[k]});
    raw.rows.push_back({row, i, -capacity});
  }
  for (int i = 0; i < F; ++i)
    for (int k = 0; k < K; ++k, ++row) {
      raw.row_senses.push_back(row_sense::less_equal);
      raw.rhs.push_back(0.0);
      raw.rows.push_back({row, zvar(i, k), 1.0});
      raw.rows.push_back({row, i, -1.0});
    }
  return normalize_instance(raw);
}

// Largest vertex set with no adjacent pair, on a preferential-attachment
// graph: a seed clique of `affinity` nodes, then each new node attaches to
// `affinity` distinct existing nodes weighted by degree.
inline milp_instance gen_independent_set(const independent_set_params& p, uint64_t seed) {
  if (p.nodes < 2 || p.affinity < 1 || p.affinity >= p.nodes)
    throw bad_params("maximum_independent_set: need nodes >= 2 and 1 <= affinity < nodes");
  rng gen(seed);
  std::vector<std::pair<int, int>> edges;
  std::vector<int> endpoints;  // degree-weighted sampling pool
  for (int u = 0; u < p.affinity; ++u)
    for (int v = u + 1; v < p.affinity; ++v) {
      edges.push_back({u, v});
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  if (p.affinity == 1) endpoints.push_back(0);  // lone seed node, degree pool must not be empty
  for (int v = p.affinity; v < p.nodes; ++v) {
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < p.affinity) {
      const int u = endpoints[gen.uniform_below(endpoints.size())];
      if (u != v && std::find(chosen.begin(), chosen.end(), u) == chosen.end())
        chosen.push_back(u);
    }
    std::sort(chosen.begin(), chosen.end());
    for (int u : chosen) edges.push_back({u, v});
    for (int u : chosen) {
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }

  raw_milp raw;
  raw.num_vars = p.nodes;
  raw.sense = objective_sense::maximize;
  raw.objective.assign(p.nodes, 1.0);
  raw.lower.assign(p.nodes, 0.0);
  raw.upper.assign(p.nodes, 1.0);
  raw.integer_set.resize(p.nodes);
  for (int v = 0; v < p.nodes; ++v) raw.integer_set[v] = v;
  raw.row_senses.assign(edges.size(), row_sense::less_equal);
  raw.rhs.assign(edges.size(), 1.0);
  for (size_t e = 0; e < edges.size(); ++e) {
    raw.rows.push_back({static_cast<int>(e), edges[e].first, 1.0});
    raw.rows.push_back({static_cast<int>(e), edges[e].second, 1.0});
  }
  return normalize_instance(raw);
}

}  // namespace detail

// Seeded instance generation; the spec fully determines the output.
inline milp_instance generate(const family_spec& spec) {
  milp_instance inst;
  switch (spec.family) {
    case family_kind::set_covering: {
      const auto& p = std::get<set_covering_params>(spec.params);
      inst = detail::gen_set_covering(p, spec.seed);
      inst.name = "set_covering_r" + std::to_string(p.rows) + "_c" + std::to_string(p.cols) +
                  "_s" + std::to_string(spec.seed);
      break;
    }
    case family_kind::combinatorial_auction: {
      const auto& p = std::get<combinatorial_auction_params>(spec.params);
      inst = detail::gen_combinatorial_auction(p, spec.seed);
      inst.name = "combinatorial_auction_i" + std::to_string(p.items) + "_b" +
                  std::to_string(p.bids) + "_s" + std::to_string(spec.seed);
      break;
    }
    case family_kind::capacitated_facility_location: {
      const auto& p = std::get<facility_location_params>(spec.params);
      inst = detail::gen_facility_location(p, spec.seed);
      inst.name = "capacitated_facility_location_f" + std::to_string(p.facilities) + "_c" +
                  std::to_string(p.customers) + "_s" + std::to_string(spec.seed);
      break;
    }
    case family_kind::maximum_independent_set: {
      const auto& p = std::get<independent_set_params>(spec.params);
      inst = detail::gen_independent_set(p, spec.seed);
      inst.name = "maximum_independent_set_n" + std::to_string(p.nodes) + "_a" +
                  std::to_string(p.affinity) + "_s" + std::to_string(spec.seed);
      break;
    }
  }
  inst.family = to_string(spec.family);
  inst.seed = spec.seed;
  return inst;
}

}  // namespace lbb
