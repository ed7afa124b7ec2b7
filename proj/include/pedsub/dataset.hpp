#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ped {

enum class ColumnKind { continuous, categorical };

/// One feature column. Categorical columns carry their level dictionary; the
/// stored cell value is the level's index in `levels`.
struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> levels;

  bool is_categorical() const { return kind == ColumnKind::categorical; }
  int cardinality() const { return static_cast<int>(levels.size()); }

  static ColumnSchema continuous(std::string name) { return {std::move(name), ColumnKind::continuous, {}}; }
  static ColumnSchema categorical(std::string name, std::vector<std::string> levels) {
    return {std::move(name), ColumnKind::categorical, std::move(levels)};
  }

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

/// Immutable N x p feature table (column-major) with a K-class label vector.
class Dataset {
 public:
  /// Validates every invariant and throws SchemaError on violation. Empty
  /// `class_names` defaults to "0".."K-1".
  Dataset(std::vector<ColumnSchema> schema, std::vector<std::vector<double>> columns,
          std::vector<int> labels, int n_classes, std::vector<std::string> class_names = {});

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return schema_.size(); }
  int n_classes() const { return n_classes_; }

  double value(std::size_t row, std::size_t col) const { return columns_[col][row]; }
  std::span<const double> column(std::size_t col) const { return columns_[col]; }
  int label(std::size_t row) const { return labels_[row]; }
  std::span<const int> labels() const { return labels_; }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& column_schema(std::size_t col) const { return schema_[col]; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::vector<double> row(std::size_t r) const;
  std::vector<std::size_t> class_counts() const;

  /// Rows in the given order; indices may repeat.
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Column names and kinds agree (level dictionaries may differ).
  bool same_layout(const Dataset& other) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<ColumnSchema> schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<int> labels_;
  int n_classes_ = 0;
  std::vector<std::string> class_names_;
};

}  // namespace ped
