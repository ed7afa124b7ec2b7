#include "pedsub/twinning.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "pedsub/errors.hpp"
#include "pedsub/point_index.hpp"

namespace ped {

std::vector<double> twinning_coordinates(const Dataset& data, std::span<const std::size_t> rows,
                                         std::size_t* dim) {
  const double onehot = 1.0 / std::sqrt(2.0);
  std::size_t d = static_cast<std::size_t>(data.n_classes());
  for (const auto& col : data.schema()) d += col.is_categorical() ? static_cast<std::size_t>(col.cardinality()) : 1;
  const std::size_t m = rows.size();
  std::vector<double> coords(m * d, 0.0);

  std::size_t offset = 0;
  for (std::size_t f = 0; f < data.n_features(); ++f) {
    const auto col = data.column(f);
    const auto& schema = data.column_schema(f);
    if (schema.is_categorical()) {
      for (std::size_t i = 0; i < m; ++i)
        coords[i * d + offset + static_cast<std::size_t>(col[rows[i]])] = onehot;
      offset += static_cast<std::size_t>(schema.cardinality());
      continue;
    }
    double mean = 0.0;
    for (std::size_t r : rows) mean += col[r];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t r : rows) var += (col[r] - mean) * (col[r] - mean);
    const double sd = m > 1 ? std::sqrt(var / static_cast<double>(m - 1)) : 0.0;
    for (std::size_t i = 0; i < m; ++i)
      coords[i * d + offset] = sd > 0.0 ? (col[rows[i]] - mean) / sd : 0.0;
    ++offset;
  }
  for (std::size_t i = 0; i < m; ++i)
    coords[i * d + offset + static_cast<std::size_t>(data.label(rows[i]))] = onehot;
  *dim = d;
  return coords;
}

std::vector<std::size_t> twin(const Dataset& data, std::span<const std::size_t> rows, std::size_t ratio,
                              Seed seed) {
  if (ratio == 0) throw InvalidArgument("twinning ratio must be >= 1");
  std::vector<std::size_t> out;
  if (rows.empty()) return out;
  if (ratio == 1) {
    out.assign(rows.begin(), rows.end());
    std::sort(out.begin(), out.end());
    return out;
  }
  std::size_t dim = 0;
  auto coords = twinning_coordinates(data, rows, &dim);
  PointIndex index(std::move(coords), dim);
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::size_t current = pick(rng);
  // Emit the current point, delete its r-1 nearest remaining neighbours and
  // continue from the remaining point nearest the last one deleted.
  while (true) {
    out.push_back(rows[current]);
    index.remove(current);
    if (index.alive_count() == 0) break;
    const auto neighbours = index.nearest_k(index.point(current), ratio - 1);
    for (std::size_t nb : neighbours) index.remove(nb);
    if (index.alive_count() == 0) break;
    const std::size_t anchor = neighbours.empty() ? current : neighbours.back();
    current = index.nearest(index.point(anchor));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> twin_within(const Dataset& data, std::span<const std::size_t> rows,
                                     std::size_t n_target, Seed seed) {
  if (n_target == 0) throw InvalidArgument("twinning target size must be >= 1");
  if (n_target > rows.size())
    throw InvalidArgument("twinning target " + std::to_string(n_target) + " exceeds the " +
                          std::to_string(rows.size()) + " available rows");
  if (n_target == rows.size()) return {rows.begin(), rows.end()};
  const std::size_t ratio = rows.size() / n_target;
  auto picked = twin(data, rows, ratio, derive_subseed(seed, "twin", 0));
  if (picked.size() > n_target) {
    std::vector<std::size_t> kept;
    kept.reserve(n_target);
    Rng rng = make_rng(derive_subseed(seed, "subselect", 0));
    std::sample(picked.begin(), picked.end(), std::back_inserter(kept), n_target, rng);
    picked = std::move(kept);
  }
  return picked;
}

}  // namespace ped
