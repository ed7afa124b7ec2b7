#include "pedsub/dataset.hpp"

#include <cmath>
#include <set>

#include "pedsub/errors.hpp"

namespace ped {

Dataset::Dataset(std::vector<ColumnSchema> schema, std::vector<std::vector<double>> columns,
                 std::vector<int> labels, int n_classes, std::vector<std::string> class_names)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      class_names_(std::move(class_names)) {
  if (labels_.empty()) throw SchemaError("dataset has no rows");
  if (schema_.empty()) throw SchemaError("dataset has no feature columns");
  if (n_classes_ < 2) throw SchemaError("dataset needs at least 2 classes, got " + std::to_string(n_classes_));
  if (columns_.size() != schema_.size())
    throw SchemaError("schema lists " + std::to_string(schema_.size()) + " columns but " +
                      std::to_string(columns_.size()) + " were given");
  if (class_names_.empty()) {
    for (int k = 0; k < n_classes_; ++k) class_names_.push_back(std::to_string(k));
  }
  if (class_names_.size() != static_cast<std::size_t>(n_classes_))
    throw SchemaError("class dictionary size does not match the class count");

  std::set<std::string> names;
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    const auto& col = schema_[c];
    if (!names.insert(col.name).second) throw SchemaError("duplicate column name '" + col.name + "'");
    if (columns_[c].size() != labels_.size())
      throw SchemaError("column '" + col.name + "' has " + std::to_string(columns_[c].size()) +
                        " values, expected " + std::to_string(labels_.size()));
    if (col.is_categorical()) {
      if (col.cardinality() < 2)
        throw SchemaError("categorical column '" + col.name + "' needs at least 2 levels");
      for (double v : columns_[c]) {
        if (!(v >= 0.0) || v >= col.cardinality() || v != std::floor(v))
          throw SchemaError("categorical column '" + col.name + "' holds an invalid level code");
      }
    }
  }
  for (int y : labels_) {
    if (y < 0 || y >= n_classes_) throw SchemaError("label " + std::to_string(y) + " out of range");
  }
}

std::vector<double> Dataset::row(std::size_t r) const {
  std::vector<double> out(n_features());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = columns_[c][r];
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    cols[c].reserve(rows.size());
    for (std::size_t r : rows) cols[c].push_back(columns_[c][r]);
  }
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(labels_[r]);
  return Dataset(schema_, std::move(cols), std::move(labels), n_classes_, class_names_);
}

bool Dataset::same_layout(const Dataset& other) const {
  if (schema_.size() != other.schema_.size()) return false;
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].name != other.schema_[c].name || schema_[c].kind != other.schema_[c].kind)
      return false;
  }
  return true;
}

}  // namespace ped
