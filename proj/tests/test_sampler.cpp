#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "pedsub/errors.hpp"
#include "pedsub/generators.hpp"
#include "pedsub/metrics.hpp"
#include "pedsub/parallel.hpp"
#include "pedsub/point_index.hpp"
#include "pedsub/sampler.hpp"
#include "pedsub/twinning.hpp"

using namespace ped;

namespace {

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

bool distinct_in_range(const std::vector<std::size_t>& rows, std::size_t n) {
  std::set<std::size_t> s(rows.begin(), rows.end());
  return s.size() == rows.size() && (rows.empty() || *s.rbegin() < n);
}

std::vector<std::size_t> brute_nearest_k(const std::vector<double>& pts, std::size_t dim,
                                         const std::vector<bool>& alive, std::span<const double> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    if (!alive[i]) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += (pts[i * dim + j] - q[j]) * (pts[i * dim + j] - q[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
  return out;
}

PointSet rows_as_points(const Dataset& d, const std::vector<std::size_t>& rows) {
  PointSet s;
  s.dim = d.n_features();
  for (auto r : rows)
    for (std::size_t f = 0; f < d.n_features(); ++f) s.coords.push_back(d.value(r, f));
  return s;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("point index matches brute force under deletions") {
    // (points, dimension): linear scan, kd-tree, linear scan in high dimension
    for (const auto& [n, dim] : std::vector<std::pair<std::size_t, std::size_t>>{{100, 3}, {3000, 3}, {3000, 12}}) {
      std::mt19937_64 rng(n + dim);
      std::normal_distribution<double> z;
      std::vector<double> pts(n * dim);
      // rounded coordinates create exact distance ties
      for (auto& v : pts) v = std::round(z(rng) * 4.0) / 4.0;
      PointIndex index(pts, dim);
      CHECK(index.uses_tree() == (n == 3000 && dim == 3));
      std::vector<bool> alive(n, true);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      // enough deletions to force tree rebuilds
      for (int step = 0; step < 2500; ++step) {
        const std::size_t q = pick(rng);
        const std::vector<double> query(pts.begin() + static_cast<long>(q * dim),
                                        pts.begin() + static_cast<long>(q * dim + dim));
        REQUIRE(index.nearest_k(query, 7) == brute_nearest_k(pts, dim, alive, query, 7));
        const std::size_t victim = pick(rng);
        index.remove(victim);
        alive[victim] = false;
      }
      CHECK(index.alive_count() == static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true)));
    }
    PointIndex empty_after({0.0, 1.0}, 1);
    empty_after.remove(0);
    empty_after.remove(1);
    CHECK(empty_after.nearest(std::vector<double>{0.5}) == empty_after.size());
  }

  TEST_CASE("twinning coordinates") {
    Dataset d({ColumnSchema::continuous("x"), ColumnSchema::categorical("c", {"a", "b"})}, {{1, 3, 5}, {0, 1, 1}},
              {0, 1, 0}, 2);
    std::size_t dim = 0;
    const auto rows = iota_rows(3);
    const auto c = twinning_coordinates(d, rows, &dim);
    CHECK(dim == 5);
    const double h = 1.0 / std::sqrt(2.0);
    CHECK(c[0] == doctest::Approx(-1.0));
    CHECK(c[5] == doctest::Approx(0.0));
    CHECK(c[10] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(h));
    CHECK(c[2] == 0.0);
    CHECK(c[3] == doctest::Approx(h));  // label 0
    CHECK(c[9] == doctest::Approx(h));  // row 1, label 1
  }

  TEST_CASE("twin_within contract") {
    const auto d = generate(GeneratorSpec::preset("waveform"), 2000, Seed{1});
    const auto rows = iota_rows(d.n_rows());
    CHECK(twin_within(d, rows, rows.size(), Seed{2}) == rows);
    const std::vector<std::size_t> ten{3, 8, 13, 21, 34, 55, 89, 144, 233, 377};
    const auto five = twin_within(d, ten, 5, Seed{2});
    CHECK(five.size() == 5);
    for (auto r : five) CHECK(std::find(ten.begin(), ten.end(), r) != ten.end());
    CHECK(std::is_sorted(five.begin(), five.end()));
    CHECK(distinct_in_range(five, d.n_rows()));
    for (std::size_t target : {1u, 7u, 333u, 999u, 1001u}) {
      const auto t = twin_within(d, rows, target, Seed{3});
      CHECK(t.size() == target);
      CHECK(distinct_in_range(t, d.n_rows()));
      CHECK(t == twin_within(d, rows, target, Seed{3}));
    }
    CHECK_THROWS_AS(twin_within(d, ten, 0, Seed{1}), InvalidArgument);
    CHECK_THROWS_AS(twin_within(d, ten, 11, Seed{1}), InvalidArgument);
    // ratio-r twinning keeps at least ceil(N/r) points
    CHECK(twin(d, rows, 3, Seed{4}).size() >= 667);
  }

  TEST_CASE("twinning matches the stratum better than a typical uniform sample") {
    const auto d = generate(GeneratorSpec::preset("twonorm", 2), 4000, Seed{5});
    std::vector<std::size_t> stratum;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
      if (d.label(i) == 0) stratum.push_back(i);
    const auto full = rows_as_points(d, stratum);
    const double within_full = mean_within_distance(full);
    auto energy = [&](const std::vector<std::size_t>& rows) {
      const auto s = rows_as_points(d, rows);
      return 2.0 * mean_cross_distance(s, full) - mean_within_distance(s) - within_full;
    };
    const double twin_e = energy(twin_within(d, stratum, 100, Seed{6}));
    std::vector<double> uni;
    for (int i = 0; i < 21; ++i) {
      std::vector<std::size_t> u;
      std::mt19937_64 rng(1000 + i);
      std::sample(stratum.begin(), stratum.end(), std::back_inserter(u), 100, rng);
      uni.push_back(energy(u));
    }
    std::nth_element(uni.begin(), uni.begin() + 10, uni.end());
    CHECK(twin_e <= uni[10]);
  }

  TEST_CASE("uniform selection") {
    const auto d = generate(GeneratorSpec::preset("imbalanced_threenorm", 2), 100'000, Seed{7});
    const auto all = select_uniform(d, d.n_rows(), Seed{1});
    CHECK(all.size() == d.n_rows());
    CHECK(distinct_in_range(all.row_indices, d.n_rows()));
    const auto s = select_uniform(d, 1000, Seed{8});
    CHECK(s.row_indices == select_uniform(d, 1000, Seed{8}).row_indices);
    CHECK(s.method == SubdataMethod::uniform);
    // minority share within 3 hypergeometric sd of its population share
    const double N = 1e5, n = 1e3;
    const double p = static_cast<double>(d.class_counts()[1]) / N;
    const double sd = std::sqrt(n * p * (1 - p) * (N - n) / (N - 1));
    std::size_t minority = 0;
    for (auto r : s.row_indices) minority += d.label(r) == 1;
    CHECK(std::abs(static_cast<double>(minority) - n * p) <= 3.0 * sd);
    CHECK_THROWS_AS(select_uniform(d, d.n_rows() + 1, Seed{1}), InvalidArgument);
  }

  TEST_CASE("twinning selection over all rows") {
    const auto d = generate(GeneratorSpec::preset("radial3"), 3000, Seed{9});
    const auto s = select_twinning(d, 300, Seed{10});
    CHECK(s.size() == 300);
    CHECK(s.method == SubdataMethod::twinning);
    CHECK(distinct_in_range(s.row_indices, d.n_rows()));
    CHECK(select_twinning(d, 3000, Seed{10}).size() == 3000);
    CHECK_THROWS_AS(select_twinning(d, 3001, Seed{10}), InvalidArgument);
  }

  TEST_CASE("PED selection contract") {
    const auto d = generate(GeneratorSpec::preset("radial3"), 2500, Seed{7});
    PedConfig cfg;
    cfg.n = 500;
    cfg.seed = Seed{11};
    const auto run = run_ped(d, cfg);
    const auto& sub = run.subdata;
    CHECK(sub.size() == 500);
    CHECK(sub.method == SubdataMethod::ped);
    CHECK(distinct_in_range(sub.row_indices, d.n_rows()));
    REQUIRE(sub.provenance.size() == sub.size());
    std::vector<std::size_t> per(run.partition.stratum_count(), 0);
    for (std::size_t i = 0; i < sub.size(); ++i) {
      CHECK(run.partition.assignments[sub.row_indices[i]] == sub.provenance[i]);
      ++per[sub.provenance[i]];
    }
    CHECK(per == run.plan.sizes());
    std::size_t outer = 0;
    for (auto r : sub.row_indices) outer += d.label(r) == 1;
    CHECK(outer / 500.0 > 0.08);

    set_max_threads(1);
    const auto one = select_ped(d, cfg);
    set_max_threads(4);
    const auto four = select_ped(d, cfg);
    set_max_threads(0);
    CHECK(one.row_indices == sub.row_indices);
    CHECK(four.row_indices == sub.row_indices);
    CHECK(to_json(run) == to_json(run_ped(d, cfg)));
    CHECK_FALSE(to_json(run).contains("timings"));
    CHECK(to_json(run, true).contains("timings"));
  }

  TEST_CASE("PED on separable data keeps pure strata near their lower bound") {
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
      x.push_back(i + 1000 * (i / 500));  // gaps at the class boundaries
      y.push_back((i / 500) % 2);
    }
    const auto d = oracle::continuous_dataset({x}, y, 2);
    PedConfig cfg;
    cfg.n = 100;
    cfg.seed = Seed{12};
    const auto run = run_ped(d, cfg);
    CHECK(run.partition.total_gini == 0.0);
    CHECK(run.subdata.size() == 100);
    CHECK(run.plan.total() == 100);
    for (const auto& a : run.plan.strata) CHECK(a.size >= a.lower);
  }

  TEST_CASE("method names") {
    CHECK(method_from_name(method_name(SubdataMethod::twinning)) == SubdataMethod::twinning);
    CHECK_THROWS_AS(method_from_name("iboss"), ConfigError);
  }
}
