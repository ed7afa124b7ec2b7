#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pedsub/cart.hpp"
#include "pedsub/dataset.hpp"
#include "pedsub/seed.hpp"

namespace ped {

struct ForestConfig {
  std::size_t ntree = 100;
  /// 0 selects default_mtry(p).
  std::size_t mtry = 0;
  /// Node levels as in TreeFitConfig; 0 grows until nodes are pure or small.
  int max_depth = 0;
  std::size_t min_node_size = 5;
  Seed seed{};

  /// floor(p/3) when p >= 5, else p; never below 1.
  static std::size_t default_mtry(std::size_t p);
};

/// Plurality winner of a vote-count vector; ties go to the lowest class id.
int plurality_vote(std::span<const std::size_t> votes);

class ForestModel {
 public:
  ForestModel(std::vector<CartTree> trees, ForestConfig config, int n_classes,
              std::size_t n_features);

  const std::vector<CartTree>& trees() const { return trees_; }
  const ForestConfig& config() const { return config_; }
  int n_classes() const { return n_classes_; }

  /// Per-class tree votes for one row.
  std::vector<std::size_t> votes(const Dataset& rows, std::size_t row) const;

  std::vector<int> predict_class(const Dataset& rows) const;
  /// Vote fractions, one length-K vector per row.
  std::vector<std::vector<double>> predict_proba(const Dataset& rows) const;

 private:
  void check_arity(const Dataset& rows) const;

  std::vector<CartTree> trees_;
  ForestConfig config_;
  int n_classes_ = 0;
  std::size_t n_features_ = 0;
};

/// Tree i is grown on an N-row bootstrap drawn from derive_subseed(seed, "tree", i).
ForestModel fit_forest(const Dataset& data, const ForestConfig& config);

}  // namespace ped
