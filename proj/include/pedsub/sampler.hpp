#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedsub/allocation.hpp"
#include "pedsub/dataset.hpp"
#include "pedsub/partition.hpp"
#include "pedsub/seed.hpp"

namespace ped {

enum class SubdataMethod { ped, uniform, twinning };

std::string method_name(SubdataMethod method);
SubdataMethod method_from_name(const std::string& name);

struct Subdata {
  std::vector<std::size_t> row_indices;
  SubdataMethod method = SubdataMethod::uniform;
  std::vector<std::size_t> provenance;  // stratum id per selected row (ped only)

  std::size_t size() const { return row_indices.size(); }
};

/// Everything produced by one PED selection.
struct PedRun {
  Subdata subdata;
  Partition partition;
  AllocationPlan plan;
  PedConfig config;  // resolved
  double partition_seconds = 0.0;
  double allocation_seconds = 0.0;
  double sampling_seconds = 0.0;
};

PedRun run_ped(const Dataset& data, const PedConfig& config);
Subdata select_ped(const Dataset& data, const PedConfig& config);

/// Simple random sample without replacement. Throws InvalidArgument when n > N.
Subdata select_uniform(const Dataset& data, std::size_t n, Seed seed);

/// Twinning over all rows.
Subdata select_twinning(const Dataset& data, std::size_t n, Seed seed);

/// Method, n_l, r_l, N_l, G_l, seeds; timings only when requested.
nlohmann::json to_json(const PedRun& run, bool include_timings = false);

}  // namespace ped
