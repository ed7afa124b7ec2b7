#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "pedsub/dataset.hpp"
#include "pedsub/seed.hpp"

namespace ped {

/// Gini impurity 1 - sum_k p_k^2 of a class-count vector; 0 for an empty node.
double gini_impurity(std::span<const std::size_t> class_counts);

/// (N_l, G_l) pair used by scoring and allocation.
struct StratumSummary {
  std::size_t count = 0;
  double gini = 0.0;
};

/// Class-count summary of one node.
struct LeafStats {
  std::size_t count = 0;
  std::vector<std::size_t> class_counts;
  double gini = 0.0;
  int predicted_class = 0;  // modal class, lowest id on ties

  static LeafStats from_counts(std::vector<std::size_t> class_counts);
  std::vector<double> proportions() const;
  StratumSummary summary() const { return {count, gini}; }

  friend bool operator==(const LeafStats&, const LeafStats&) = default;
};

enum class SplitKind { continuous, categorical };

/// Continuous: left iff x <= threshold. Categorical: left iff the level is in
/// `left_levels`; levels absent from the set, including ones never seen in
/// training, go right.
struct SplitRule {
  std::size_t feature = 0;
  SplitKind kind = SplitKind::continuous;
  double threshold = 0.0;
  std::vector<int> left_levels;  // sorted

  bool goes_left(double value) const;

  friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

struct SplitCandidate {
  SplitRule rule;
  /// parent_gini * n - left_gini * n_left - right_gini * n_right
  double decrease = 0.0;
};

/// Best Gini split of `rows` over `candidate_features`, or nullopt when no
/// admissible split has a positive decrease. Ties go to the lowest feature
/// index, then the smallest threshold or lexicographically smallest level set.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features);

struct TreeFitConfig {
  /// Maximum number of node levels; 1 is a root-only tree. 0 means unlimited.
  int max_depth = 0;
  /// Features drawn per node without replacement; 0 means all p.
  std::size_t mtry = 0;
  /// A node with fewer than 2 * min_node_size rows is not split.
  std::size_t min_node_size = 1;
  Seed seed{};
};

class CartTree {
 public:
  struct Node {
    std::optional<SplitRule> split;  // nullopt for leaves
    int left = -1;
    int right = -1;
    int leaf = -1;  // leaf id for leaves
    int depth = 1;  // root is 1
  };

  CartTree() = default;
  CartTree(std::vector<Node> nodes, std::vector<LeafStats> leaves, std::size_t n_features,
           int n_classes, int max_depth);

  std::size_t leaf_count() const { return leaves_.size(); }
  /// Realized number of node levels.
  int depth() const;
  int max_depth() const { return max_depth_; }
  std::size_t n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Statistics of the training rows in each leaf, indexed by leaf id.
  const std::vector<LeafStats>& leaves() const { return leaves_; }

  /// Throws InvalidArgument when the row length differs from n_features().
  std::size_t predict_leaf(std::span<const double> row) const;
  std::size_t leaf_of(const Dataset& data, std::size_t row) const;
  int predict(const Dataset& data, std::size_t row) const {
    return leaves_[leaf_of(data, row)].predicted_class;
  }

  /// Per-leaf statistics of `data` (or of the listed rows); empty leaves
  /// report count 0 and gini 0.
  std::vector<LeafStats> leaf_stats_on(const Dataset& data) const;
  std::vector<LeafStats> leaf_stats_on(const Dataset& data, std::span<const std::size_t> rows) const;

  nlohmann::json to_json() const;

 private:
  template <typename ValueAt>
  std::size_t route(ValueAt&& value_at) const;

  std::vector<Node> nodes_;
  std::vector<LeafStats> leaves_;
  std::vector<std::vector<std::uint8_t>> left_masks_;  // per node, by level
  std::size_t n_features_ = 0;
  int n_classes_ = 0;
  int max_depth_ = 0;
};

/// Grows a CART tree on `rows` (indices may repeat, as in a bootstrap).
CartTree fit_tree(const Dataset& data, std::span<const std::size_t> rows,
                  const TreeFitConfig& config);

}  // namespace ped
