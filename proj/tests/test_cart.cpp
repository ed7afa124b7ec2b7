#include <doctest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pedsub/cart.hpp"
#include "pedsub/errors.hpp"
#include "pedsub/generators.hpp"

using namespace ped;

namespace {

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.n_rows());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

std::vector<std::size_t> all_features(const Dataset& d) {
  std::vector<std::size_t> f(d.n_features());
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

Dataset four_rows() { return oracle::continuous_dataset({{1, 2, 3, 4}}, {0, 0, 1, 1}, 2); }

}  // namespace

TEST_SUITE("cart") {
  TEST_CASE("gini impurity") {
    CHECK(gini_impurity(std::vector<std::size_t>{40, 10}) == doctest::Approx(0.32));
    CHECK(gini_impurity(std::vector<std::size_t>{5, 0, 0}) == 0.0);
    CHECK(gini_impurity(std::vector<std::size_t>{0, 0}) == 0.0);
    CHECK(gini_impurity(std::vector<std::size_t>{1, 1, 1}) == doctest::Approx(2.0 / 3.0));
    const auto s = LeafStats::from_counts({3, 5, 5});
    CHECK(s.count == 13);
    CHECK(s.predicted_class == 1);
  }

  TEST_CASE("best split on the four-row example") {
    const auto d = four_rows();
    const auto rows = all_rows(d);
    const auto feats = all_features(d);
    const auto s = best_split(d, rows, feats);
    REQUIRE(s);
    CHECK(s->rule.kind == SplitKind::continuous);
    CHECK(s->rule.threshold == 2.5);
    CHECK(s->decrease == doctest::Approx(4 * 0.5));
  }

  TEST_CASE("no split when labels agree") {
    const auto d = oracle::continuous_dataset({{1, 2, 3, 4}}, {1, 1, 1, 1}, 2);
    const auto rows = all_rows(d);
    const auto feats = all_features(d);
    CHECK_FALSE(best_split(d, rows, feats));
  }

  TEST_CASE("categorical split isolates the pure level") {
    Dataset d({ColumnSchema::categorical("c", {"A", "B"})}, {{0, 1, 0, 1, 0}}, {0, 1, 0, 1, 0}, 2);
    const auto rows = all_rows(d);
    const auto feats = all_features(d);
    const auto s = best_split(d, rows, feats);
    REQUIRE(s);
    CHECK(s->rule.kind == SplitKind::categorical);
    CHECK(s->rule.left_levels == std::vector<int>{0});
    CHECK(s->decrease == doctest::Approx(5 * (1 - (0.36 + 0.16))));
  }

  TEST_CASE("best split agrees with exhaustive search on random tiny data") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
      std::uniform_int_distribution<int> n_dist(2, 12), p_dist(1, 2), k_dist(2, 3), v_dist(0, 4);
      const int n = n_dist(rng), p = p_dist(rng), k = k_dist(rng);
      std::vector<ColumnSchema> schema;
      std::vector<std::vector<double>> cols;
      for (int f = 0; f < p; ++f) {
        const bool cat = std::bernoulli_distribution(0.3)(rng);
        std::vector<double> col;
        for (int i = 0; i < n; ++i) col.push_back(v_dist(rng));  // few values, many ties
        if (cat) schema.push_back(ColumnSchema::categorical("c" + std::to_string(f), {"a", "b", "c", "d", "e"}));
        else schema.push_back(ColumnSchema::continuous("x" + std::to_string(f)));
        cols.push_back(std::move(col));
      }
      std::vector<int> labels;
      std::uniform_int_distribution<int> y_dist(0, k - 1);
      for (int i = 0; i < n; ++i) labels.push_back(i < k ? i : y_dist(rng));
      const Dataset d(schema, cols, labels, k);
      const auto rows = all_rows(d);
      const auto feats = all_features(d);
      const auto got = best_split(d, rows, feats);
      const auto want = oracle::exhaustive_split(d, rows);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      ++checked;
      CHECK(got->rule.feature == want->feature);
      CHECK(got->decrease == doctest::Approx(want->decrease).epsilon(1e-12));
      if (want->categorical) CHECK(got->rule.left_levels == want->left_levels);
      else CHECK(got->rule.threshold == want->threshold);
    }
    CHECK(checked > 300);
  }

  TEST_CASE("fit_tree stopping rules") {
    const auto d = four_rows();
    const auto rows = all_rows(d);
    TreeFitConfig cfg;
    cfg.max_depth = 1;
    const auto stump = fit_tree(d, rows, cfg);
    CHECK(stump.leaf_count() == 1);
    CHECK(stump.leaves()[0].predicted_class == 0);  // 2/2 tie -> lowest id

    cfg.max_depth = 2;
    cfg.mtry = 1;
    const auto t = fit_tree(d, rows, cfg);
    CHECK(t.leaf_count() == 2);
    for (std::size_t r : rows) CHECK(t.predict(d, r) == d.label(r));

    const auto pure = oracle::continuous_dataset({{1, 2, 3}}, {1, 1, 1}, 2);
    const auto p = fit_tree(pure, all_rows(pure), TreeFitConfig{});
    CHECK(p.leaf_count() == 1);
    CHECK(p.leaves()[0].gini == 0.0);

    cfg.max_depth = 0;
    cfg.min_node_size = 3;  // 4 rows < 2 * 3: no split
    CHECK(fit_tree(d, rows, cfg).leaf_count() == 1);
    CHECK_THROWS_AS(fit_tree(d, std::vector<std::size_t>{}, TreeFitConfig{}), InvalidArgument);
  }

  TEST_CASE("prediction and routing") {
    const auto d = four_rows();
    TreeFitConfig cfg;
    cfg.max_depth = 2;
    const auto t = fit_tree(d, all_rows(d), cfg);
    CHECK(t.predict_leaf(std::vector<double>{1.7}) == 0);
    CHECK(t.predict_leaf(std::vector<double>{3.5}) == 1);
    CHECK_THROWS_AS(t.predict_leaf(std::vector<double>{1.0, 2.0}), InvalidArgument);

    cfg.max_depth = 1;
    const auto stump = fit_tree(d, all_rows(d), cfg);
    CHECK(stump.predict_leaf(std::vector<double>{-100}) == 0);
    CHECK(stump.predict_leaf(std::vector<double>{100}) == 0);

    // Level 2 ("C") is never seen in training, so it routes right.
    Dataset c({ColumnSchema::categorical("c", {"A", "B", "C"})}, {{0, 1, 0, 1}}, {0, 1, 0, 1}, 2);
    const auto ct = fit_tree(c, all_rows(c), TreeFitConfig{});
    REQUIRE(ct.nodes()[0].split);
    CHECK(ct.nodes()[0].split->left_levels == std::vector<int>{0});
    const std::size_t right_leaf = ct.predict_leaf(std::vector<double>{1});
    CHECK(ct.predict_leaf(std::vector<double>{2}) == right_leaf);
    CHECK(ct.predict_leaf(std::vector<double>{0}) != right_leaf);
  }

  TEST_CASE("leaf_stats_on") {
    const auto d = four_rows();
    TreeFitConfig cfg;
    cfg.max_depth = 2;
    const auto t = fit_tree(d, all_rows(d), cfg);
    CHECK(t.leaf_stats_on(d) == t.leaves());

    // 40 class-0 and 10 class-1 rows on the left, none on the right.
    std::vector<double> x(50, 1.0);
    std::vector<int> y(50, 0);
    std::fill(y.begin() + 40, y.end(), 1);
    const auto other = oracle::continuous_dataset({x}, y, 2);
    const auto stats = t.leaf_stats_on(other);
    CHECK(stats[0].count == 50);
    CHECK(stats[0].gini == doctest::Approx(0.32));
    CHECK(stats[1].count == 0);
    CHECK(stats[1].gini == 0.0);
    CHECK(stats[1].class_counts == std::vector<std::size_t>{0, 0});
  }

  TEST_CASE("tree invariants on generated data") {
    const auto d = generate(GeneratorSpec::preset("waveform"), 2000, Seed{3});
    const auto rows = all_rows(d);
    TreeFitConfig cfg;
    cfg.max_depth = 6;
    cfg.mtry = 7;
    cfg.seed = Seed{5};
    const auto t = fit_tree(d, rows, cfg);
    CHECK(t.depth() <= 6);
    std::size_t total = 0;
    for (const auto& leaf : t.leaves()) {
      total += leaf.count;
      CHECK(leaf.count >= 1);
      CHECK(leaf.gini >= 0.0);
      CHECK(leaf.gini <= 1.0 - 1.0 / 3.0 + 1e-12);
      CHECK((leaf.gini == 0.0) == (std::count(leaf.class_counts.begin(), leaf.class_counts.end(), 0u) == 2));
    }
    CHECK(total == d.n_rows());
    // weighted child impurity never exceeds the parent's
    std::vector<std::vector<std::size_t>> node_counts(t.nodes().size(), std::vector<std::size_t>(3, 0));
    for (std::size_t r : rows) {
      std::size_t i = 0;
      for (;;) {
        ++node_counts[i][static_cast<std::size_t>(d.label(r))];
        const auto& node = t.nodes()[i];
        if (!node.split) break;
        i = static_cast<std::size_t>(node.split->goes_left(d.value(r, node.split->feature)) ? node.left : node.right);
      }
    }
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
      const auto& node = t.nodes()[i];
      if (!node.split) continue;
      auto weighted = [&](std::size_t j) {
        const auto& c = node_counts[j];
        return gini_impurity(c) * static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0}));
      };
      const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
      CHECK(std::accumulate(node_counts[l].begin(), node_counts[l].end(), std::size_t{0}) >= 1);
      CHECK(std::accumulate(node_counts[r].begin(), node_counts[r].end(), std::size_t{0}) >= 1);
      CHECK(weighted(l) + weighted(r) <= weighted(i) + 1e-9);
    }
    const auto again = fit_tree(d, rows, cfg);
    CHECK(again.to_json() == t.to_json());
  }
}
