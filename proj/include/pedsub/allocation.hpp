#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pedsub/cart.hpp"

namespace ped {

struct StratumAllocation {
  std::size_t population = 0;  // N_l
  double gini = 0.0;           // G_l
  std::size_t lower = 0;       // min(t_h, N_l)
  std::size_t upper = 0;       // N_l
  std::size_t size = 0;        // n_l
  std::size_t ratio = 0;       // floor(N_l / n_l); 0 for empty strata
};

struct AllocationPlan {
  std::vector<StratumAllocation> strata;

  std::vector<std::size_t> sizes() const;
  std::size_t total() const;
};

/// Box-constrained minimizer of the expected test Gini: n_l proportional to
/// sqrt(N_l G_l) within [min(t_h, N_l), N_l], summing to n. Throws
/// InfeasibleAllocation when the bounds cannot meet n.
AllocationPlan allocate(std::span<const StratumSummary> strata, std::size_t n, std::size_t t_h);

/// Real-valued solution before integerization.
std::vector<double> relaxed_allocation(std::span<const StratumSummary> strata, std::size_t n,
                                       std::size_t t_h);

/// n_l proportional to N_l, rounded by largest remainder (uniform sampling's
/// expected allocation).
std::vector<std::size_t> proportional_allocation(std::span<const StratumSummary> strata,
                                                 std::size_t n);

/// sum_l (N_l/N) { 1 - sum_k p_lk^2 - sum_k p_lk (1 - p_lk) / n_l }, with N the
/// sum of stratum counts. Empty strata are skipped; a zero n_l on a nonempty
/// stratum throws InvalidArgument.
double expected_test_gini(std::span<const LeafStats> strata, std::span<const std::size_t> sizes);

/// Same objective from (N_l, G_l) alone, using sum_k p(1-p) = G.
double expected_test_gini(std::span<const StratumSummary> strata,
                          std::span<const std::size_t> sizes);

}  // namespace ped
