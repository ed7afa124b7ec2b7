#include "pedsub/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pedsub/errors.hpp"

namespace ped {
namespace {

using i128 = __int128;

/// Child purity SL/nL + SR/nR as an exact fraction; SL, SR are sums of
/// squared class counts. Larger means a larger Gini decrease.
struct Score {
  i128 num = 0;
  i128 den = 1;

  static Score of(std::uint64_t sl, std::uint64_t nl, std::uint64_t sr, std::uint64_t nr) {
    return {static_cast<i128>(sl) * nr + static_cast<i128>(sr) * nl, static_cast<i128>(nl) * nr};
  }
  bool beats(const Score& o) const { return num * o.den > o.num * den; }
  bool ties(const Score& o) const { return num * o.den == o.num * den; }
  /// Strictly positive decrease relative to a parent with sum of squares s over n rows.
  bool improves_on(std::uint64_t s, std::uint64_t n) const {
    return num * static_cast<i128>(n) > static_cast<i128>(s) * den;
  }
  double decrease(std::uint64_t s, std::uint64_t n) const {
    return static_cast<double>(num) / static_cast<double>(den) -
           static_cast<double>(s) / static_cast<double>(n);
  }
};

std::uint64_t sum_squares(std::span<const std::size_t> counts) {
  std::uint64_t s = 0;
  for (std::size_t c : counts) s += static_cast<std::uint64_t>(c) * c;
  return s;
}

struct Best {
  bool found = false;
  Score score;
  SplitRule rule;
};

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

/// Scans thresholds of one continuous feature. `values` ascending, `labels`
/// aligned, `parent` the node class counts.
void scan_continuous(std::size_t feature, std::span<const double> values, std::span<const int> labels,
                     std::span<const std::size_t> parent, std::uint64_t parent_ss, Best& best) {
  const std::size_t m = values.size();
  std::vector<std::size_t> right(parent.begin(), parent.end());
  std::vector<std::size_t> left(parent.size(), 0);
  std::uint64_t sl = 0, sr = parent_ss;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    sl += 2 * left[c] + 1;
    sr -= 2 * right[c] - 1;
    ++left[c];
    --right[c];
    if (!(values[i] < values[i + 1])) continue;
    const Score score = Score::of(sl, i + 1, sr, m - i - 1);
    if (!score.improves_on(parent_ss, m)) continue;
    if (!best.found || score.beats(best.score)) {
      best.found = true;
      best.score = score;
      best.rule = SplitRule{feature, SplitKind::continuous, midpoint(values[i], values[i + 1]), {}};
    }
  }
}

/// Evaluates candidate level sets of one categorical feature from its
/// level x class count table.
void scan_categorical(std::size_t feature, const std::vector<std::vector<std::size_t>>& table,
                      std::span<const std::size_t> parent, std::uint64_t parent_ss, Best& best) {
  const std::size_t k = parent.size();
  std::size_t n = 0;
  for (std::size_t c : parent) n += c;
  std::vector<int> observed;
  std::vector<std::size_t> level_n(table.size(), 0);
  for (std::size_t l = 0; l < table.size(); ++l) {
    for (std::size_t c : table[l]) level_n[l] += c;
    if (level_n[l] > 0) observed.push_back(static_cast<int>(l));
  }
  const std::size_t m = observed.size();
  if (m < 2) return;

  bool local_found = false;
  Score local_score;
  std::vector<int> local_set;
  std::vector<std::size_t> left(k);

  auto consider = [&](const std::vector<int>& set) {
    std::fill(left.begin(), left.end(), 0);
    std::size_t nl = 0;
    for (int l : set) {
      for (std::size_t c = 0; c < k; ++c) left[c] += table[static_cast<std::size_t>(l)][c];
      nl += level_n[static_cast<std::size_t>(l)];
    }
    std::uint64_t sl = 0, sr = 0;
    for (std::size_t c = 0; c < k; ++c) {
      sl += static_cast<std::uint64_t>(left[c]) * left[c];
      const std::uint64_t rc = parent[c] - left[c];
      sr += rc * rc;
    }
    const Score score = Score::of(sl, nl, sr, n - nl);
    if (!score.improves_on(parent_ss, n)) return;
    // A set and its complement describe the same split; the lexicographically
    // smaller one is the left side.
    std::vector<int> a = set;
    std::sort(a.begin(), a.end());
    std::vector<int> b;
    std::set_difference(observed.begin(), observed.end(), a.begin(), a.end(), std::back_inserter(b));
    const std::vector<int>& canon = std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()) ? b : a;
    if (!local_found || score.beats(local_score) ||
        (score.ties(local_score) &&
         std::lexicographical_compare(canon.begin(), canon.end(), local_set.begin(), local_set.end()))) {
      local_found = true;
      local_score = score;
      local_set = canon;
    }
  };

  auto scan_prefixes = [&](std::vector<int> ordered) {
    std::vector<int> prefix;
    for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
      prefix.push_back(ordered[i]);
      consider(prefix);
    }
  };

  auto order_by_share = [&](std::size_t cls) {
    std::vector<int> ordered = observed;
    std::stable_sort(ordered.begin(), ordered.end(), [&](int a, int b) {
      const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
      // table[a][cls]/n_a < table[b][cls]/n_b, cross-multiplied
      return static_cast<i128>(table[ua][cls]) * level_n[ub] < static_cast<i128>(table[ub][cls]) * level_n[ua];
    });
    return ordered;
  };

  // Exhaustive below 11 levels keeps the lexicographic tie rule exact; the
  // K = 2 prefix scan is decrease-optimal but may pick another tied set.
  if (m <= 10) {
    std::vector<int> set;
    for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
      set.clear();
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) set.push_back(observed[i]);
      consider(set);
    }
  } else if (k == 2) {
    scan_prefixes(order_by_share(1));
  } else {
    const auto modal = static_cast<std::size_t>(
        std::max_element(parent.begin(), parent.end()) - parent.begin());
    scan_prefixes(order_by_share(modal));
  }

  if (local_found && (!best.found || local_score.beats(best.score))) {
    best.found = true;
    best.score = local_score;
    best.rule = SplitRule{feature, SplitKind::categorical, 0.0, local_set};
  }
}

std::vector<std::size_t> count_classes(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(data.n_classes()), 0);
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data.label(r))];
  return counts;
}

}  // namespace

double gini_impurity(std::span<const std::size_t> class_counts) {
  double n = 0.0;
  for (std::size_t c : class_counts) n += static_cast<double>(c);
  if (n == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t c : class_counts) {
    const double p = static_cast<double>(c) / n;
    s += p * p;
  }
  return std::max(0.0, 1.0 - s);
}

LeafStats LeafStats::from_counts(std::vector<std::size_t> class_counts) {
  LeafStats s;
  s.count = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  s.gini = gini_impurity(class_counts);
  s.predicted_class = static_cast<int>(
      std::max_element(class_counts.begin(), class_counts.end()) - class_counts.begin());
  s.class_counts = std::move(class_counts);
  return s;
}

std::vector<double> LeafStats::proportions() const {
  std::vector<double> p(class_counts.size(), 0.0);
  if (count == 0) return p;
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = static_cast<double>(class_counts[k]) / static_cast<double>(count);
  return p;
}

bool SplitRule::goes_left(double value) const {
  if (kind == SplitKind::continuous) return value <= threshold;
  return std::binary_search(left_levels.begin(), left_levels.end(), static_cast<int>(value));
}

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features) {
  const auto parent = count_classes(data, rows);
  const std::uint64_t parent_ss = sum_squares(parent);
  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  Best best;
  std::vector<std::pair<double, int>> pairs;
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t f : features) {
    if (f >= data.n_features()) throw InvalidArgument("candidate feature out of range");
    Best local;
    if (data.column_schema(f).is_categorical()) {
      std::vector<std::vector<std::size_t>> table(
          static_cast<std::size_t>(data.column_schema(f).cardinality()),
          std::vector<std::size_t>(parent.size(), 0));
      for (std::size_t r : rows)
        ++table[static_cast<std::size_t>(data.value(r, f))][static_cast<std::size_t>(data.label(r))];
      scan_categorical(f, table, parent, parent_ss, local);
    } else {
      pairs.clear();
      for (std::size_t r : rows) pairs.emplace_back(data.value(r, f), data.label(r));
      std::sort(pairs.begin(), pairs.end());
      values.resize(pairs.size());
      labels.resize(pairs.size());
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        values[i] = pairs[i].first;
        labels[i] = pairs[i].second;
      }
      scan_continuous(f, values, labels, parent, parent_ss, local);
    }
    if (local.found && (!best.found || local.score.beats(best.score))) best = std::move(local);
  }
  if (!best.found) return std::nullopt;
  return SplitCandidate{best.rule, best.score.decrease(parent_ss, rows.size())};
}

// ---------------------------------------------------------------------------

CartTree::CartTree(std::vector<Node> nodes, std::vector<LeafStats> leaves, std::size_t n_features,
                   int n_classes, int max_depth)
    : nodes_(std::move(nodes)),
      leaves_(std::move(leaves)),
      n_features_(n_features),
      n_classes_(n_classes),
      max_depth_(max_depth) {
  left_masks_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& split = nodes_[i].split;
    if (!split || split->kind != SplitKind::categorical) continue;
    const int top = split->left_levels.empty() ? 0 : split->left_levels.back();
    auto& mask = left_masks_[i];
    mask.assign(static_cast<std::size_t>(top) + 1, 0);
    for (int l : split->left_levels) mask[static_cast<std::size_t>(l)] = 1;
  }
}

int CartTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

template <typename ValueAt>
std::size_t CartTree::route(ValueAt&& value_at) const {
  std::size_t i = 0;
  while (nodes_[i].split) {
    const SplitRule& s = *nodes_[i].split;
    const double v = value_at(s.feature);
    bool left;
    if (s.kind == SplitKind::continuous) {
      left = v <= s.threshold;
    } else {
      const auto& mask = left_masks_[i];
      const auto level = static_cast<std::size_t>(v);
      left = v >= 0.0 && level < mask.size() && mask[level] != 0;
    }
    i = static_cast<std::size_t>(left ? nodes_[i].left : nodes_[i].right);
  }
  return static_cast<std::size_t>(nodes_[i].leaf);
}

std::size_t CartTree::predict_leaf(std::span<const double> row) const {
  if (row.size() != n_features_)
    throw InvalidArgument("row has " + std::to_string(row.size()) + " values, tree expects " +
                          std::to_string(n_features_));
  return route([&](std::size_t f) { return row[f]; });
}

std::size_t CartTree::leaf_of(const Dataset& data, std::size_t row) const {
  return route([&](std::size_t f) { return data.value(row, f); });
}

std::vector<LeafStats> CartTree::leaf_stats_on(const Dataset& data,
                                               std::span<const std::size_t> rows) const {
  if (data.n_features() != n_features_) throw InvalidArgument("dataset arity does not match the tree");
  const auto k = static_cast<std::size_t>(std::max(n_classes_, data.n_classes()));
  std::vector<std::vector<std::size_t>> counts(leaves_.size(), std::vector<std::size_t>(k, 0));
  for (std::size_t r : rows) ++counts[leaf_of(data, r)][static_cast<std::size_t>(data.label(r))];
  std::vector<LeafStats> out;
  out.reserve(leaves_.size());
  for (std::size_t l = 0; l < leaves_.size(); ++l) {
    auto s = LeafStats::from_counts(std::move(counts[l]));
    if (s.count == 0) s.predicted_class = leaves_[l].predicted_class;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LeafStats> CartTree::leaf_stats_on(const Dataset& data) const {
  std::vector<std::size_t> rows(data.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return leaf_stats_on(data, rows);
}

nlohmann::json CartTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    nlohmann::json j{{"id", i}, {"depth", n.depth}};
    if (n.split) {
      nlohmann::json s{{"feature", n.split->feature}};
      if (n.split->kind == SplitKind::continuous) {
        s["kind"] = "continuous";
        s["threshold"] = n.split->threshold;
      } else {
        s["kind"] = "categorical";
        s["left_levels"] = n.split->left_levels;
      }
      j["split"] = std::move(s);
      j["left"] = n.left;
      j["right"] = n.right;
    } else {
      const auto& leaf = leaves_[static_cast<std::size_t>(n.leaf)];
      j["leaf"] = n.leaf;
      j["count"] = leaf.count;
      j["class_counts"] = leaf.class_counts;
      j["gini"] = leaf.gini;
      j["predicted_class"] = leaf.predicted_class;
    }
    nodes.push_back(std::move(j));
  }
  return {{"n_features", n_features_}, {"n_classes", n_classes_}, {"max_depth", max_depth_},
          {"leaf_count", leaves_.size()}, {"nodes", std::move(nodes)}};
}

// ---------------------------------------------------------------------------

namespace {

/// Grows one tree over local sample positions. Continuous features keep a
/// position list sorted by value; every list is stably partitioned at each
/// split so a node always owns the same range [begin, end) in all of them.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::span<const std::size_t> rows, const TreeFitConfig& config)
      : data_(data),
        config_(config),
        k_(static_cast<std::size_t>(data.n_classes())),
        p_(data.n_features()),
        rng_(make_rng(config.seed)) {
    const auto m = static_cast<std::uint32_t>(rows.size());
    labels_.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) labels_[i] = data.label(rows[i]);
    local_.resize(p_);
    order_.resize(p_);
    for (std::size_t f = 0; f < p_; ++f) {
      const auto col = data.column(f);
      auto& lc = local_[f];
      lc.resize(m);
      for (std::uint32_t i = 0; i < m; ++i) lc[i] = col[rows[i]];
      if (data.column_schema(f).is_categorical()) continue;
      auto& ord = order_[f];
      ord.resize(m);
      std::iota(ord.begin(), ord.end(), 0u);
      std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        return lc[a] != lc[b] ? lc[a] < lc[b] : a < b;
      });
    }
    positions_.resize(m);
    std::iota(positions_.begin(), positions_.end(), 0u);
    goes_left_.resize(m);
    scratch_.resize(m);
    pool_.resize(p_);
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
  }

  CartTree build() {
    grow(0, static_cast<std::uint32_t>(positions_.size()), 1);
    return CartTree(std::move(nodes_), std::move(leaves_), p_, data_.n_classes(), config_.max_depth);
  }

 private:
  int grow(std::uint32_t begin, std::uint32_t end, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(CartTree::Node{std::nullopt, -1, -1, -1, depth});

    std::vector<std::size_t> counts(k_, 0);
    for (std::uint32_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(labels_[positions_[i]])];
    const std::size_t n = end - begin;
    const bool pure = std::count(counts.begin(), counts.end(), std::size_t{0}) + 1 == static_cast<std::ptrdiff_t>(k_);
    const bool too_small = n < 2 * config_.min_node_size;
    const bool too_deep = config_.max_depth > 0 && depth >= config_.max_depth;

    std::optional<SplitRule> rule;
    if (!pure && !too_small && !too_deep) rule = find_split(begin, end, counts);
    if (!rule) {
      nodes_[static_cast<std::size_t>(index)].leaf = static_cast<int>(leaves_.size());
      leaves_.push_back(LeafStats::from_counts(std::move(counts)));
      return index;
    }

    const auto& col = local_[rule->feature];
    std::uint32_t n_left = 0;
    for (std::uint32_t i = begin; i < end; ++i) {
      const std::uint32_t pos = positions_[i];
      goes_left_[pos] = rule->goes_left(col[pos]) ? 1 : 0;
      n_left += goes_left_[pos];
    }
    partition_range(positions_, begin, end);
    for (std::size_t f = 0; f < p_; ++f)
      if (!order_[f].empty()) partition_range(order_[f], begin, end);

    const int left = grow(begin, begin + n_left, depth + 1);
    const int right = grow(begin + n_left, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.split = std::move(rule);
    node.left = left;
    node.right = right;
    return index;
  }

  void partition_range(std::vector<std::uint32_t>& list, std::uint32_t begin, std::uint32_t end) {
    std::uint32_t out = begin, spill = 0;
    for (std::uint32_t i = begin; i < end; ++i) {
      const std::uint32_t pos = list[i];
      if (goes_left_[pos]) list[out++] = pos;
      else scratch_[spill++] = pos;
    }
    std::copy(scratch_.begin(), scratch_.begin() + spill, list.begin() + out);
  }

  std::optional<SplitRule> find_split(std::uint32_t begin, std::uint32_t end,
                                      const std::vector<std::size_t>& counts) {
    const std::size_t mtry = config_.mtry == 0 ? p_ : std::min(config_.mtry, p_);
    std::vector<std::size_t> features;
    if (mtry >= p_) {
      features = pool_;
    } else {
      for (std::size_t i = 0; i < mtry; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, p_ - 1);
        std::swap(pool_[i], pool_[pick(rng_)]);
      }
      features.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(mtry));
      std::sort(features.begin(), features.end());
    }

    const std::uint64_t parent_ss = sum_squares(counts);
    Best best;
    for (std::size_t f : features) {
      Best local;
      const auto& col = local_[f];
      if (data_.column_schema(f).is_categorical()) {
        std::vector<std::vector<std::size_t>> table(
            static_cast<std::size_t>(data_.column_schema(f).cardinality()), std::vector<std::size_t>(k_, 0));
        for (std::uint32_t i = begin; i < end; ++i) {
          const std::uint32_t pos = positions_[i];
          ++table[static_cast<std::size_t>(col[pos])][static_cast<std::size_t>(labels_[pos])];
        }
        scan_categorical(f, table, counts, parent_ss, local);
      } else {
        const auto& ord = order_[f];
        if (!(col[ord[begin]] < col[ord[end - 1]])) continue;  // constant in this node
        values_.resize(end - begin);
        node_labels_.resize(end - begin);
        for (std::uint32_t i = begin; i < end; ++i) {
          values_[i - begin] = col[ord[i]];
          node_labels_[i - begin] = labels_[ord[i]];
        }
        scan_continuous(f, values_, node_labels_, counts, parent_ss, local);
      }
      if (local.found && (!best.found || local.score.beats(best.score))) best = std::move(local);
    }
    if (!best.found) return std::nullopt;
    return best.rule;
  }

  const Dataset& data_;
  TreeFitConfig config_;
  std::size_t k_;
  std::size_t p_;
  Rng rng_;
  std::vector<int> labels_;
  std::vector<std::vector<double>> local_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint32_t> positions_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> pool_;
  std::vector<double> values_;
  std::vector<int> node_labels_;
  std::vector<CartTree::Node> nodes_;
  std::vector<LeafStats> leaves_;
};

}  // namespace

CartTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeFitConfig& config) {
  if (rows.empty()) throw InvalidArgument("fit_tree needs at least one row");
  if (config.max_depth < 0) throw ConfigError("max_depth must be >= 1 (or 0 for unlimited)");
  if (config.mtry > data.n_features()) throw ConfigError("mtry exceeds the feature count");
  if (config.min_node_size == 0) throw ConfigError("min_node_size must be >= 1");
  for (std::size_t r : rows)
    if (r >= data.n_rows()) throw InvalidArgument("row index out of range");
  if (rows.size() > 0xffffffffu) throw InvalidArgument("too many rows for one tree");
  return TreeBuilder(data, rows, config).build();
}

}  // namespace ped
