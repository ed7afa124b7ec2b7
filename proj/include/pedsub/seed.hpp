#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ped {

/// Master seed for one randomized operation. Every seeded routine draws from
/// `make_rng(seed)` or from sub-streams obtained with `derive_subseed`, so the
/// output depends only on the seed and never on scheduling.
struct Seed {
  std::uint64_t master = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

using Rng = std::mt19937_64;

/// Pure function of (seed, label, index); distinct pairs give distinct streams.
Seed derive_subseed(Seed seed, std::string_view stream_label, std::uint64_t index);

inline Rng make_rng(Seed seed) { return Rng(seed.master); }

}  // namespace ped
