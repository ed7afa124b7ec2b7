#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pedsub/allocation.hpp"
#include "pedsub/errors.hpp"

using namespace ped;

TEST_SUITE("allocation") {
  TEST_CASE("closed-form example") {
    const std::vector<StratumSummary> s{{900, 0.1}, {100, 0.4}};
    const auto plan = allocate(s, 100, 5);
    CHECK(plan.sizes() == std::vector<std::size_t>{60, 40});
    CHECK(plan.strata[0].ratio == 15);
    CHECK(plan.strata[1].ratio == 2);
    CHECK(plan.strata[1].lower == 5);
    const auto relaxed = relaxed_allocation(s, 100, 5);
    CHECK(relaxed[0] == doctest::Approx(60.0));
    CHECK(relaxed[1] == doctest::Approx(40.0));
  }

  TEST_CASE("pure stratum clamps to its lower bound") {
    const std::vector<StratumSummary> s{{1000, 0.2}, {4, 0.0}};
    const auto plan = allocate(s, 50, 5);
    CHECK(plan.sizes() == std::vector<std::size_t>{46, 4});
    CHECK(plan.strata[1].lower == 4);
  }

  TEST_CASE("single stratum takes the whole budget") {
    const std::vector<StratumSummary> s{{500, 0.3}};
    CHECK(allocate(s, 37, 5).sizes() == std::vector<std::size_t>{37});
  }

  TEST_CASE("all strata pure: lower bounds, remainder by population") {
    const std::vector<StratumSummary> s{{100, 0.0}, {300, 0.0}, {3, 0.0}};
    const auto plan = allocate(s, 50, 5);
    CHECK(plan.total() == 50);
    CHECK(plan.strata[2].size == 3);
    CHECK(plan.strata[0].size >= 5);
    CHECK(plan.strata[1].size > plan.strata[0].size);
  }

  TEST_CASE("informative strata full: leftover goes to pure strata") {
    const std::vector<StratumSummary> s{{10, 0.5}, {200, 0.0}};
    const auto plan = allocate(s, 60, 5);
    CHECK(plan.sizes() == std::vector<std::size_t>{10, 50});
    CHECK(plan.strata[0].ratio == 1);
  }

  TEST_CASE("infeasible bounds") {
    const std::vector<StratumSummary> s{{10, 0.5}, {10, 0.5}};
    CHECK_THROWS_AS(allocate(s, 8, 5), InfeasibleAllocation);
    CHECK_THROWS_AS(allocate(s, 21, 5), InfeasibleAllocation);
  }

  TEST_CASE("expected test Gini") {
    const std::vector<LeafStats> pure{LeafStats::from_counts({10, 0}), LeafStats::from_counts({0, 7})};
    CHECK(expected_test_gini(pure, std::vector<std::size_t>{1, 3}) == 0.0);
    // p = (0.5, 0.5), n_l = 10: 0.5 + 0.5 / 10
    const std::vector<LeafStats> half{LeafStats::from_counts({20, 20})};
    CHECK(expected_test_gini(half, std::vector<std::size_t>{10}) == doctest::Approx(0.55));
    CHECK(expected_test_gini(half, std::vector<std::size_t>{1'000'000'000}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(expected_test_gini(half, std::vector<std::size_t>{0}), InvalidArgument);
    const std::vector<StratumSummary> s{{40, 0.5}};
    CHECK(expected_test_gini(s, std::vector<std::size_t>{10}) == doctest::Approx(0.55));
  }

  TEST_CASE("allocation matches the integer grid and beats proportional") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 120; ++i) {
      const auto inst = oracle::random_instance(rng);
      const auto summaries = inst.summaries();
      const auto plan = allocate(summaries, inst.n, inst.t_h);
      const auto sizes = plan.sizes();
      CHECK(plan.total() == inst.n);
      for (const auto& a : plan.strata) {
        CHECK(a.size >= a.lower);
        CHECK(a.size <= a.upper);
        CHECK(a.ratio == a.population / a.size);
      }
      const double got = oracle::test_gini(inst.counts, sizes);
      CHECK(got == doctest::Approx(oracle::grid_minimum(inst.counts, inst.n, inst.t_h)).epsilon(1e-12));
      CHECK(expected_test_gini(inst.leaves(), sizes) == doctest::Approx(got).epsilon(1e-12));

      const auto prop = proportional_allocation(summaries, inst.n);
      CHECK(std::accumulate(prop.begin(), prop.end(), std::size_t{0}) == inst.n);
      bool prop_feasible = true;
      for (std::size_t l = 0; l < prop.size(); ++l)
        prop_feasible = prop_feasible && prop[l] >= plan.strata[l].lower && prop[l] > 0;
      if (prop_feasible)
        CHECK(expected_test_gini(inst.leaves(), sizes) <= expected_test_gini(inst.leaves(), prop) + 1e-12);
    }
  }

  TEST_CASE("relaxed allocation is scale equivariant") {
    const std::vector<StratumSummary> s{{900, 0.1}, {100, 0.4}, {500, 0.25}};
    std::vector<StratumSummary> scaled = s;
    for (auto& x : scaled) x.count *= 7;
    const auto a = relaxed_allocation(s, 200, 5);
    const auto b = relaxed_allocation(scaled, 200, 5);
    for (std::size_t l = 0; l < a.size(); ++l) CHECK(a[l] == doctest::Approx(b[l]));
    const double sum = std::accumulate(a.begin(), a.end(), 0.0);
    CHECK(sum == doctest::Approx(200.0));
    // unclamped shares follow sqrt(N_l G_l)
    CHECK(a[0] / a[1] == doctest::Approx(std::sqrt(90.0 / 40.0)));
  }

  TEST_CASE("proportional allocation uses largest remainders") {
    const std::vector<StratumSummary> s{{50, 0.1}, {30, 0.1}, {20, 0.1}};
    CHECK(proportional_allocation(s, 10) == std::vector<std::size_t>{5, 3, 2});
    CHECK(proportional_allocation(s, 7) == std::vector<std::size_t>{4, 2, 1});
  }
}
