#include "pedsub/forest.hpp"

#include <algorithm>

#include "pedsub/errors.hpp"
#include "pedsub/parallel.hpp"

namespace ped {

std::size_t ForestConfig::default_mtry(std::size_t p) { return std::max<std::size_t>(1, p >= 5 ? p / 3 : p); }

int plurality_vote(std::span<const std::size_t> votes) {
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

ForestModel::ForestModel(std::vector<CartTree> trees, ForestConfig config, int n_classes,
                         std::size_t n_features)
    : trees_(std::move(trees)), config_(config), n_classes_(n_classes), n_features_(n_features) {}

void ForestModel::check_arity(const Dataset& rows) const {
  if (rows.n_features() != n_features_)
    throw InvalidArgument("feature table has " + std::to_string(rows.n_features()) +
                          " columns, model expects " + std::to_string(n_features_));
}

std::vector<std::size_t> ForestModel::votes(const Dataset& rows, std::size_t row) const {
  std::vector<std::size_t> v(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& tree : trees_) ++v[static_cast<std::size_t>(tree.predict(rows, row))];
  return v;
}

std::vector<int> ForestModel::predict_class(const Dataset& rows) const {
  check_arity(rows);
  std::vector<int> out(rows.n_rows());
  constexpr std::size_t block = 1024;
  parallel_for((rows.n_rows() + block - 1) / block, [&](std::size_t b) {
    const std::size_t end = std::min(rows.n_rows(), (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) out[i] = plurality_vote(votes(rows, i));
  });
  return out;
}

std::vector<std::vector<double>> ForestModel::predict_proba(const Dataset& rows) const {
  check_arity(rows);
  std::vector<std::vector<double>> out(rows.n_rows());
  const double t = static_cast<double>(trees_.size());
  constexpr std::size_t block = 1024;
  parallel_for((rows.n_rows() + block - 1) / block, [&](std::size_t b) {
    const std::size_t end = std::min(rows.n_rows(), (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      const auto v = votes(rows, i);
      auto& p = out[i];
      p.resize(v.size());
      for (std::size_t k = 0; k < v.size(); ++k) p[k] = static_cast<double>(v[k]) / t;
    }
  });
  return out;
}

ForestModel fit_forest(const Dataset& data, const ForestConfig& config) {
  if (config.ntree == 0) throw ConfigError("ntree must be >= 1");
  if (data.n_rows() < 2) throw InvalidArgument("a forest needs at least 2 rows");
  const auto counts = data.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw InvalidArgument("training data contains a single class");
  ForestConfig cfg = config;
  if (cfg.mtry == 0) cfg.mtry = ForestConfig::default_mtry(data.n_features());
  if (cfg.mtry > data.n_features()) throw ConfigError("mtry exceeds the feature count");

  const std::size_t n = data.n_rows();
  std::vector<CartTree> trees(cfg.ntree);
  parallel_for(cfg.ntree, [&](std::size_t t) {
    const Seed tree_seed = derive_subseed(cfg.seed, "tree", t);
    Rng rng = make_rng(tree_seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> bootstrap(n);
    for (auto& r : bootstrap) r = pick(rng);
    TreeFitConfig tc;
    tc.max_depth = cfg.max_depth;
    tc.mtry = cfg.mtry;
    tc.min_node_size = cfg.min_node_size;
    tc.seed = derive_subseed(tree_seed, "split", 0);
    trees[t] = fit_tree(data, bootstrap, tc);
  });
  return ForestModel(std::move(trees), cfg, data.n_classes(), data.n_features());
}

}  // namespace ped
