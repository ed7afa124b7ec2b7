#include "pedsub/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pedsub/errors.hpp"

namespace ped {
namespace {

/// x_l = clamp(lambda * s_l, lo_l, hi_l) with sum x_l = budget over the
/// strata in `active`; results written into `x`. Violators are clamped on
/// the side whose total violation is larger, then the rest is re-solved.
void waterfill(std::vector<std::size_t> active, const std::vector<double>& s,
               const std::vector<double>& lo, const std::vector<double>& hi, double budget,
               std::vector<double>& x) {
  while (!active.empty()) {
    double weight = 0.0;
    for (std::size_t l : active) weight += s[l];
    const double lambda = weight > 0.0 ? budget / weight : 0.0;
    double under = 0.0, over = 0.0;
    for (std::size_t l : active) {
      x[l] = lambda * s[l];
      if (x[l] < lo[l]) under += lo[l] - x[l];
      if (x[l] > hi[l]) over += x[l] - hi[l];
    }
    if (under == 0.0 && over == 0.0) return;
    std::vector<std::size_t> keep;
    for (std::size_t l : active) {
      const bool fix_low = under >= over && x[l] < lo[l];
      const bool fix_high = over >= under && x[l] > hi[l];
      if (fix_low) {
        x[l] = lo[l];
        budget -= lo[l];
      } else if (fix_high) {
        x[l] = hi[l];
        budget -= hi[l];
      } else {
        keep.push_back(l);
      }
    }
    active = std::move(keep);
  }
}

struct Bounds {
  std::vector<std::size_t> lower, upper;
};

Bounds bounds_of(std::span<const StratumSummary> strata, std::size_t n, std::size_t t_h) {
  Bounds b;
  std::size_t sum_lo = 0, sum_hi = 0;
  for (const auto& s : strata) {
    if (s.gini < 0.0) throw InvalidArgument("stratum Gini must be nonnegative");
    b.lower.push_back(std::min(t_h, s.count));
    b.upper.push_back(s.count);
    sum_lo += b.lower.back();
    sum_hi += b.upper.back();
  }
  if (sum_lo > n)
    throw InfeasibleAllocation("lower bounds sum to " + std::to_string(sum_lo) + " > n = " + std::to_string(n));
  if (sum_hi < n)
    throw InfeasibleAllocation("strata hold " + std::to_string(sum_hi) + " rows < n = " + std::to_string(n));
  return b;
}

/// Largest-remainder rounding of `x` within [lower, upper], summing to n.
std::vector<std::size_t> round_preserving_sum(const std::vector<double>& x, const Bounds& b, std::size_t n) {
  const std::size_t L = x.size();
  std::vector<std::size_t> out(L);
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double clamped = std::clamp(x[l], static_cast<double>(b.lower[l]), static_cast<double>(b.upper[l]));
    out[l] = static_cast<std::size_t>(std::floor(clamped + 1e-9));
    out[l] = std::clamp(out[l], b.lower[l], b.upper[l]);
    assigned += out[l];
  }
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return x[a] - std::floor(x[a]) > x[c] - std::floor(x[c]);
  });
  while (assigned < n) {
    bool moved = false;
    for (std::size_t l : order) {
      if (assigned == n) break;
      if (out[l] < b.upper[l]) {
        ++out[l];
        ++assigned;
        moved = true;
      }
    }
    if (!moved) break;
  }
  while (assigned > n) {
    bool moved = false;
    for (auto it = order.rbegin(); it != order.rend() && assigned > n; ++it) {
      if (out[*it] > b.lower[*it]) {
        --out[*it];
        --assigned;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return out;
}

}  // namespace

std::vector<std::size_t> AllocationPlan::sizes() const {
  std::vector<std::size_t> s;
  for (const auto& a : strata) s.push_back(a.size);
  return s;
}

std::size_t AllocationPlan::total() const {
  std::size_t t = 0;
  for (const auto& a : strata) t += a.size;
  return t;
}

std::vector<double> relaxed_allocation(std::span<const StratumSummary> strata, std::size_t n,
                                       std::size_t t_h) {
  const Bounds b = bounds_of(strata, n, t_h);
  const std::size_t L = strata.size();
  std::vector<double> x(L, 0.0), lo(L), hi(L), sqrt_w(L), size_w(L);
  std::vector<std::size_t> informative, flat;
  double flat_floor = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    lo[l] = static_cast<double>(b.lower[l]);
    hi[l] = static_cast<double>(b.upper[l]);
    sqrt_w[l] = std::sqrt(static_cast<double>(strata[l].count) * strata[l].gini);
    size_w[l] = static_cast<double>(strata[l].count);
    x[l] = lo[l];
    if (b.lower[l] == b.upper[l]) continue;
    if (sqrt_w[l] > 0.0) {
      informative.push_back(l);
    } else {
      flat.push_back(l);
      flat_floor += lo[l];
    }
  }
  double fixed = 0.0;
  for (std::size_t l = 0; l < L; ++l)
    if (b.lower[l] == b.upper[l]) fixed += lo[l];

  // Pure strata stay at their lower bound unless the informative strata are
  // full; any leftover is then spread over pure strata in proportion to N_l.
  const double budget = static_cast<double>(n) - fixed - flat_floor;
  double informative_cap = 0.0;
  for (std::size_t l : informative) informative_cap += hi[l];
  if (budget >= informative_cap) {
    for (std::size_t l : informative) x[l] = hi[l];
    waterfill(flat, size_w, lo, hi, budget - informative_cap + flat_floor, x);
  } else {
    waterfill(informative, sqrt_w, lo, hi, budget, x);
  }
  return x;
}

AllocationPlan allocate(std::span<const StratumSummary> strata, std::size_t n, std::size_t t_h) {
  if (strata.empty()) throw InvalidArgument("allocate needs at least one stratum");
  const Bounds b = bounds_of(strata, n, t_h);
  auto sizes = round_preserving_sum(relaxed_allocation(strata, n, t_h), b, n);

  // Rounding can leave the integer point off the optimum; the objective is
  // separable and convex, so exchanging single units while it strictly
  // improves reaches the integer minimum.
  const std::size_t L = strata.size();
  std::vector<double> w(L);
  for (std::size_t l = 0; l < L; ++l) w[l] = static_cast<double>(strata[l].count) * strata[l].gini;
  for (std::size_t iter = 0; iter < 4 * n + 16; ++iter) {
    std::size_t receiver = L, donor = L;
    double gain = 0.0, cost = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double nl = static_cast<double>(sizes[l]);
      if (sizes[l] < b.upper[l]) {
        const double g = w[l] / nl - w[l] / (nl + 1.0);
        if (receiver == L || g > gain) {
          receiver = l;
          gain = g;
        }
      }
      if (sizes[l] > b.lower[l]) {
        const double c = w[l] / (nl - 1.0) - w[l] / nl;
        if (donor == L || c < cost) {
          donor = l;
          cost = c;
        }
      }
    }
    if (receiver == L || donor == L || receiver == donor) break;
    if (!(gain > cost * (1.0 + 1e-12) + 1e-300)) break;
    ++sizes[receiver];
    --sizes[donor];
  }

  AllocationPlan plan;
  for (std::size_t l = 0; l < L; ++l) {
    StratumAllocation a;
    a.population = strata[l].count;
    a.gini = strata[l].gini;
    a.lower = b.lower[l];
    a.upper = b.upper[l];
    a.size = sizes[l];
    a.ratio = sizes[l] == 0 ? 0 : strata[l].count / sizes[l];
    plan.strata.push_back(a);
  }
  return plan;
}

std::vector<std::size_t> proportional_allocation(std::span<const StratumSummary> strata, std::size_t n) {
  std::size_t total = 0;
  for (const auto& s : strata) total += s.count;
  if (total == 0) throw InvalidArgument("proportional allocation needs a nonempty population");
  std::vector<double> x;
  Bounds b;
  for (const auto& s : strata) {
    x.push_back(static_cast<double>(n) * static_cast<double>(s.count) / static_cast<double>(total));
    b.lower.push_back(0);
    b.upper.push_back(s.count);
  }
  return round_preserving_sum(x, b, n);
}

double expected_test_gini(std::span<const LeafStats> strata, std::span<const std::size_t> sizes) {
  if (strata.size() != sizes.size()) throw InvalidArgument("one sample size per stratum is required");
  double total = 0.0;
  for (const auto& s : strata) total += static_cast<double>(s.count);
  if (total == 0.0) throw InvalidArgument("strata are empty");
  double g = 0.0;
  for (std::size_t l = 0; l < strata.size(); ++l) {
    if (strata[l].count == 0) continue;
    if (sizes[l] == 0) throw InvalidArgument("stratum " + std::to_string(l) + " has a zero sample size");
    double sum_sq = 0.0, sum_var = 0.0;
    for (double p : strata[l].proportions()) {
      sum_sq += p * p;
      sum_var += p * (1.0 - p);
    }
    // Gini of a test point scored with proportions estimated from n_l draws:
    // the population impurity plus the estimation variance sum_k Var(p_hat_k).
    g += static_cast<double>(strata[l].count) / total *
         (1.0 - sum_sq + sum_var / static_cast<double>(sizes[l]));
  }
  return g;
}

double expected_test_gini(std::span<const StratumSummary> strata, std::span<const std::size_t> sizes) {
  if (strata.size() != sizes.size()) throw InvalidArgument("one sample size per stratum is required");
  double total = 0.0;
  for (const auto& s : strata) total += static_cast<double>(s.count);
  if (total == 0.0) throw InvalidArgument("strata are empty");
  double g = 0.0;
  for (std::size_t l = 0; l < strata.size(); ++l) {
    if (strata[l].count == 0) continue;
    if (sizes[l] == 0) throw InvalidArgument("stratum " + std::to_string(l) + " has a zero sample size");
    g += static_cast<double>(strata[l].count) / total *
         (strata[l].gini + strata[l].gini / static_cast<double>(sizes[l]));
  }
  return g;
}

}  // namespace ped
