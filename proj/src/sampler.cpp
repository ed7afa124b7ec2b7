#include "pedsub/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <numeric>

#include "pedsub/errors.hpp"
#include "pedsub/parallel.hpp"
#include "pedsub/twinning.hpp"

namespace ped {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> sample_without_replacement(std::span<const std::size_t> pool, std::size_t n, Seed seed) {
  std::vector<std::size_t> out;
  out.reserve(n);
  Rng rng = make_rng(seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), n, rng);
  return out;
}

}  // namespace

std::string method_name(SubdataMethod method) {
  switch (method) {
    case SubdataMethod::ped: return "ped";
    case SubdataMethod::uniform: return "uniform";
    case SubdataMethod::twinning: return "twinning";
  }
  return "unknown";
}

SubdataMethod method_from_name(const std::string& name) {
  if (name == "ped") return SubdataMethod::ped;
  if (name == "uniform") return SubdataMethod::uniform;
  if (name == "twinning") return SubdataMethod::twinning;
  throw ConfigError("unknown subdata method '" + name + "'");
}

PedRun run_ped(const Dataset& data, const PedConfig& config) {
  PedRun run;
  run.config = config.resolved(data.n_rows());

  auto t0 = Clock::now();
  run.partition = find_partition(data, run.config);
  run.partition_seconds = seconds_since(t0);

  t0 = Clock::now();
  const auto summaries = run.partition.summaries();
  run.plan = allocate(summaries, run.config.n, run.config.t_h);
  run.allocation_seconds = seconds_since(t0);

  t0 = Clock::now();
  const auto strata_rows = run.partition.stratum_rows();
  std::vector<std::vector<std::size_t>> picked(strata_rows.size());
  parallel_for(strata_rows.size(), [&](std::size_t l) {
    const auto& a = run.plan.strata[l];
    if (a.size == 0) return;
    const Seed stream = derive_subseed(run.config.seed, "stratum", l);
    // With r_l = 1 twinning would keep every row; a uniform draw is equivalent and cheaper.
    if (a.ratio == 1) picked[l] = sample_without_replacement(strata_rows[l], a.size, stream);
    else picked[l] = twin_within(data, strata_rows[l], a.size, stream);
  });
  run.subdata.method = SubdataMethod::ped;
  for (std::size_t l = 0; l < picked.size(); ++l) {
    for (std::size_t r : picked[l]) {
      run.subdata.row_indices.push_back(r);
      run.subdata.provenance.push_back(l);
    }
  }
  run.sampling_seconds = seconds_since(t0);
  return run;
}

Subdata select_ped(const Dataset& data, const PedConfig& config) { return run_ped(data, config).subdata; }

Subdata select_uniform(const Dataset& data, std::size_t n, Seed seed) {
  if (n == 0) throw InvalidArgument("subdata size must be >= 1");
  if (n > data.n_rows())
    throw InvalidArgument("subdata size " + std::to_string(n) + " exceeds N = " + std::to_string(data.n_rows()));
  std::vector<std::size_t> all(data.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Subdata s;
  s.method = SubdataMethod::uniform;
  s.row_indices = sample_without_replacement(all, n, seed);
  return s;
}

Subdata select_twinning(const Dataset& data, std::size_t n, Seed seed) {
  if (n > data.n_rows())
    throw InvalidArgument("subdata size " + std::to_string(n) + " exceeds N = " + std::to_string(data.n_rows()));
  std::vector<std::size_t> all(data.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Subdata s;
  s.method = SubdataMethod::twinning;
  s.row_indices = twin_within(data, all, n, seed);
  return s;
}

nlohmann::json to_json(const PedRun& run, bool include_timings) {
  const auto& c = run.config;
  nlohmann::json strata = nlohmann::json::array();
  for (std::size_t l = 0; l < run.plan.strata.size(); ++l) {
    const auto& a = run.plan.strata[l];
    strata.push_back({{"id", l},
                      {"N", a.population},
                      {"G", a.gini},
                      {"class_counts", run.partition.strata[l].class_counts},
                      {"lower", a.lower},
                      {"n", a.size},
                      {"r", a.ratio},
                      {"seed", derive_subseed(c.seed, "stratum", l).master}});
  }
  nlohmann::json j{{"method", "ped"},
                   {"n", c.n},
                   {"config",
                    {{"t_s", *c.t_s},
                     {"t_d", *c.t_d},
                     {"t_n", c.t_n},
                     {"t_h", c.t_h},
                     {"eval_cap", c.eval_cap},
                     {"seed", c.seed.master}}},
                   {"strata", std::move(strata)},
                   {"partition", to_json(run.partition, include_timings)}};
  if (include_timings)
    j["timings"] = {{"partition_s", run.partition_seconds},
                    {"allocation_s", run.allocation_seconds},
                    {"sampling_s", run.sampling_seconds}};
  return j;
}

}  // namespace ped
