#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedsub/cart.hpp"
#include "pedsub/dataset.hpp"
#include "pedsub/seed.hpp"

namespace ped {

/// Tuning of the subdata search. Unset t_s / t_d take their data-dependent
/// defaults in `resolved`.
struct PedConfig {
  std::size_t n = 0;                 // target subdata size
  std::optional<std::size_t> t_s;    // subsample size, default floor(sqrt(N))
  std::optional<int> t_d;            // deepest candidate, default max(3, floor(log2 t_s))
  int t_n = 10;                      // candidate trees per depth
  std::size_t t_h = 5;               // minimum per-stratum sample
  std::size_t eval_cap = 5'000'000;  // max rows used to score a candidate
  Seed seed{};

  /// Defaults filled in for a dataset of N rows; throws ConfigError when invalid.
  PedConfig resolved(std::size_t n_rows) const;
  std::size_t leaf_cap() const { return t_h == 0 ? 0 : n / t_h; }
};

/// One scored candidate tree. `depth` counts split levels, so a depth-d
/// candidate has at most 2^d leaves.
struct CandidateScore {
  int replicate = 0;
  int depth = 0;
  std::size_t leaves = 0;
  double total_gini = 0.0;
  bool admissible = false;
};

struct Partition {
  CartTree source_tree;
  int depth = 0;  // split levels of the winning candidate
  std::vector<std::uint32_t> assignments;  // leaf id of every row
  std::vector<LeafStats> strata;           // indexed by leaf id, full-data statistics
  double total_gini = 0.0;
  std::vector<CandidateScore> candidates;
  std::size_t winner = 0;  // index into candidates
  double search_seconds = 0.0;
  double scoring_seconds = 0.0;

  std::size_t stratum_count() const { return strata.size(); }
  std::vector<StratumSummary> summaries() const;
  /// Row indices of each stratum, ascending.
  std::vector<std::vector<std::size_t>> stratum_rows() const;
};

/// sum_l (N_l / N) G_l. Throws InvalidArgument when total is 0.
double total_gini(std::span<const StratumSummary> strata, std::size_t total);
double total_gini(std::span<const LeafStats> strata);

/// Searches t_n trees per depth 3..t_d grown on t_s-row subsamples and keeps
/// the one with the smallest total Gini among those with at most n/t_h leaves.
Partition find_partition(const Dataset& data, const PedConfig& config);

struct StratumRow {
  std::size_t id = 0;
  std::size_t count = 0;
  double gini = 0.0;
  int modal_class = 0;
};

std::vector<StratumRow> stratum_report(const Partition& partition);
std::string render_stratum_table(std::span<const StratumRow> rows);
nlohmann::json stratum_report_json(std::span<const StratumRow> rows);

/// Winning depth, L, strata and every candidate score. Wall times only when
/// `include_timings` is set, so the default output is reproducible.
nlohmann::json to_json(const Partition& partition, bool include_timings = false);

}  // namespace ped
