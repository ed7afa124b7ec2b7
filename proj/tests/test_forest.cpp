#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "pedsub/errors.hpp"
#include "pedsub/forest.hpp"
#include "pedsub/generators.hpp"
#include "pedsub/metrics.hpp"
#include "pedsub/parallel.hpp"

using namespace ped;

TEST_SUITE("forest") {
  TEST_CASE("default mtry") {
    CHECK(ForestConfig::default_mtry(2) == 2);
    CHECK(ForestConfig::default_mtry(4) == 4);
    CHECK(ForestConfig::default_mtry(5) == 1);
    CHECK(ForestConfig::default_mtry(21) == 7);
  }

  TEST_CASE("plurality vote ties go to the lowest class") {
    CHECK(plurality_vote(std::vector<std::size_t>{0, 0, 4}) == 2);
    CHECK(plurality_vote(std::vector<std::size_t>{0, 5, 0, 5}) == 1);
    CHECK(plurality_vote(std::vector<std::size_t>{3, 1}) == 0);
  }

  TEST_CASE("single tree fits separable data") {
    const auto d = oracle::continuous_dataset({{1, 2, 3, 4, 5, 6, 7, 8}}, {0, 0, 0, 0, 1, 1, 1, 1}, 2);
    ForestConfig cfg;
    cfg.ntree = 1;
    cfg.min_node_size = 1;
    cfg.seed = Seed{1};
    const auto m = fit_forest(d, cfg);
    CHECK(m.trees().size() == 1);
    CHECK(accuracy(m.predict_class(d), d.labels()) == 1.0);
    for (std::size_t r = 0; r < d.n_rows(); ++r) CHECK(m.predict_class(d)[r] == m.trees()[0].predict(d, r));
  }

  TEST_CASE("vote fractions") {
    const auto d = generate(GeneratorSpec::preset("waveform"), 600, Seed{2});
    ForestConfig cfg;
    cfg.ntree = 4;
    cfg.seed = Seed{3};
    const auto m = fit_forest(d, cfg);
    const auto proba = m.predict_proba(d);
    const auto cls = m.predict_class(d);
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
      const auto votes = m.votes(d, r);
      CHECK(std::accumulate(votes.begin(), votes.end(), std::size_t{0}) == 4);
      double sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(proba[r][k] == static_cast<double>(votes[k]) / 4.0);
        sum += proba[r][k];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(cls[r] == plurality_vote(votes));
    }
  }

  TEST_CASE("determinism across seeds and thread counts") {
    const auto train = generate(GeneratorSpec::preset("threenorm", 5), 1500, Seed{4});
    const auto test = generate(GeneratorSpec::preset("threenorm", 5), 500, Seed{5});
    ForestConfig cfg;
    cfg.ntree = 20;
    cfg.seed = Seed{6};
    set_max_threads(1);
    const auto a = fit_forest(train, cfg).predict_proba(test);
    set_max_threads(4);
    const auto b = fit_forest(train, cfg).predict_proba(test);
    set_max_threads(0);
    CHECK(a == b);
    cfg.seed = Seed{7};
    CHECK_FALSE(fit_forest(train, cfg).predict_proba(test) == a);
  }

  TEST_CASE("errors") {
    const auto one_class = oracle::continuous_dataset({{1, 2, 3}}, {0, 0, 0}, 2);
    CHECK_THROWS_AS(fit_forest(one_class, ForestConfig{}), InvalidArgument);
    const auto d = oracle::continuous_dataset({{1, 2, 3, 4}}, {0, 1, 0, 1}, 2);
    ForestConfig cfg;
    cfg.ntree = 0;
    CHECK_THROWS_AS(fit_forest(d, cfg), ConfigError);
    cfg.ntree = 2;
    cfg.mtry = 3;
    CHECK_THROWS_AS(fit_forest(d, cfg), ConfigError);
    cfg.mtry = 0;
    const auto m = fit_forest(d, cfg);
    const auto wide = oracle::continuous_dataset({{1, 2}, {3, 4}}, {0, 1}, 2);
    CHECK_THROWS_AS(m.predict_class(wide), InvalidArgument);
  }

  TEST_CASE("twonorm sanity") {
    const auto spec = GeneratorSpec::preset("twonorm", 2);
    const auto train = generate(spec, 5000, Seed{21});
    const auto test = generate(spec, 5000, Seed{22});
    ForestConfig cfg;
    cfg.ntree = 50;
    cfg.seed = Seed{23};
    const auto m = fit_forest(train, cfg);
    CHECK(accuracy(m.predict_class(test), test.labels()) >= 0.90);
  }
}
