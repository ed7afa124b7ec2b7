#pragma once

#include <cstddef>
#include <functional>

namespace ped {

/// Upper bound on worker threads used by library routines. 0 restores the
/// default (hardware concurrency).
void set_max_threads(unsigned threads);
unsigned max_threads();

/// Runs body(i) for i in [0, count). Each index runs exactly once; callers
/// write results into per-index slots so the outcome is independent of the
/// thread count. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ped
