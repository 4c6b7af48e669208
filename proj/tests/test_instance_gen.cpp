// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "lbb/brute_force.hpp"
#include "lbb/instance_gen.hpp"
#include "lbb/simplex.hpp"

using namespace lbb;

namespace {

family_spec sc_spec(int rows, int cols, double density, uint64_t seed, int max_cost = 5) {
  family_spec spec;
  spec.family = family_kind::set_covering;
  spec.params = set_covering_params{rows, cols, density, max_cost};
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("degenerate set covering keeps both columns on the single row") {
  const auto inst = generate(sc_spec(1, 2, 0.9, 7));
  REQUIRE(inst.num_vars == 2);
  REQUIRE(inst.num_cons == 1);
  // normalized >= row: -x0 - x1 <= -1, both columns present
  REQUIRE(inst.rows.size() == 2);
  CHECK(inst.rows[0].value == -1.0);
  CHECK(inst.rows[1].value == -1.0);
  CHECK(inst.rhs[0] == -1.0);
}

TEST_CASE("identical specs generate byte-identical instances") {
  for (int fam = 0; fam < 4; ++fam) {
    family_spec spec;
    switch (fam) {
      case 0: spec = sc_spec(20, 40, 0.1, 11); break;
      case 1:
        spec.family = family_kind::combinatorial_auction;
        spec.params = combinatorial_auction_params{10, 20, 0.6};
        spec.seed = 11;
        break;
      case 2:
        spec.family = family_kind::capacitated_facility_location;
        spec.params = facility_location_params{4, 5, 1.8};
        spec.seed = 11;
        break;
      default:
        spec.family = family_kind::maximum_independent_set;
        spec.params = independent_set_params{20, 3};
        spec.seed = 11;
        break;
    }
    CHECK(generate(spec) == generate(spec));
  }
}

TEST_CASE("independent-set edge count matches the attachment construction") {
  family_spec spec;
  spec.family = family_kind::maximum_independent_set;
  const int nodes = 500, affinity = 4;
  spec.params = independent_set_params{nodes, affinity};
  spec.seed = 3;
  const auto inst = generate(spec);
  // every edge row has exactly two entries; rows = edges
  const long expected_edges = static_cast<long>(affinity) * (nodes - affinity) +
                              affinity * (affinity - 1) / 2;
  CHECK(inst.num_cons == expected_edges);
  CHECK(static_cast<long>(inst.rows.size()) == 2 * expected_edges);
}

TEST_CASE("generators reject bad parameters") {
  CHECK_THROWS_AS(generate(sc_spec(0, 10, 0.5, 1)), bad_params);
  CHECK_THROWS_AS(generate(sc_spec(10, 10, 1.5, 1)), bad_params);
  family_spec spec;
  spec.family = family_kind::maximum_independent_set;
  spec.params = independent_set_params{10, 10};
  CHECK_THROWS_AS(generate(spec), bad_params);
  spec.family = family_kind::capacitated_facility_location;
  spec.params = facility_location_params{5, 5, 0.5};
  CHECK_THROWS_AS(generate(spec), bad_params);
}

TEST_CASE("every family is LP-relaxation feasible on a sample of seeds") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<family_spec> specs(4);
    specs[0] = sc_spec(20, 40, 0.1, seed);
    specs[1].family = family_kind::combinatorial_auction;
    specs[1].params = combinatorial_auction_params{10, 20, 0.6};
    specs[1].seed = seed;
    specs[2].family = family_kind::capacitated_facility_location;
    specs[2].params = facility_location_params{4, 5, 1.6};
    specs[2].seed = seed;
    specs[3].family = family_kind::maximum_independent_set;
    specs[3].params = independent_set_params{25, 3};
    specs[3].seed = seed;
    for (const auto& spec : specs) {
      const auto inst = generate(spec);
      INFO(inst.name);
      CHECK(lp_relax_solve(inst).status == lp_status::optimal);
    }
  }
}

TEST_CASE("set covering column coverage tracks density * rows") {
  const int rows = 60, cols = 40;
  const double density = 0.15;
  double covered = 0.0;
  int columns = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = generate(sc_spec(rows, cols, density, seed));
    covered += static_cast<double>(inst.rows.size());
    columns += inst.num_vars;
  }
  const double mean_coverage = covered / columns;
  // repair steps only add entries, so the mean sits slightly above d*rows
  CHECK(mean_coverage >= density * rows * 0.9);
  CHECK(mean_coverage <= density * rows * 1.1);
}

TEST_CASE("independent-set LP relaxation bounds the integer optimum") {
  family_spec spec;
  spec.family = family_kind::maximum_independent_set;
  spec.params = independent_set_params{12, 3};
  for (uint64_t seed = 0; seed < 3; ++seed) {
    spec.seed = seed;
    const auto inst = generate(spec);
    const auto lp = lp_relax_solve(inst);
    REQUIRE(lp.status == lp_status::optimal);
    const auto exact = brute_force_solve(inst);
    REQUIRE(exact.feasible);
    // minimization after the sense flip: LP bound <= integer optimum
    CHECK(lp.objective <= exact.objective + 1e-6);
  }
}

TEST_CASE("facility location mixes binary opens with continuous assignments") {
  family_spec spec;
  spec.family = family_kind::capacitated_facility_location;
  spec.params = facility_location_params{3, 4, 2.0};
  spec.seed = 1;
  const auto inst = generate(spec);
  CHECK(inst.num_vars == 3 + 12);
  CHECK(inst.integer_set == std::vector<int>{0, 1, 2});
  // K equality rows split into 2K, F capacity rows, F*K linking rows
  CHECK(inst.num_cons == 2 * 4 + 3 + 12);
}
