#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pedsub/dataset.hpp"
#include "pedsub/seed.hpp"

namespace ped {

/// Embedding used for twinning distances: continuous features standardized
/// within `rows`, categorical features and the class label one-hot scaled by
/// 1/sqrt(2). Row-major, `*dim` coordinates per row.
std::vector<double> twinning_coordinates(const Dataset& data, std::span<const std::size_t> rows,
                                         std::size_t* dim);

/// Ratio-r twinning: emits about |rows|/r representatives (never fewer than
/// ceil(|rows|/r)), as indices into `data`, ascending.
std::vector<std::size_t> twin(const Dataset& data, std::span<const std::size_t> rows,
                              std::size_t ratio, Seed seed);

/// Exactly n_target rows of `rows`: twinning with r = floor(|rows|/n_target)
/// followed by a uniform subselection. Ascending.
std::vector<std::size_t> twin_within(const Dataset& data, std::span<const std::size_t> rows,
                                     std::size_t n_target, Seed seed);

}  // namespace ped
