#include "pedsub/partition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pedsub/errors.hpp"
#include "pedsub/parallel.hpp"

namespace ped {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t isqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

int floor_log2(std::size_t n) {
  int d = -1;
  while (n > 0) {
    n >>= 1;
    ++d;
  }
  return d;
}

std::vector<std::size_t> uniform_rows(std::size_t n_rows, std::size_t size, Seed seed) {
  std::vector<std::size_t> all(n_rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (size >= n_rows) return all;
  std::vector<std::size_t> out;
  out.reserve(size);
  Rng rng = make_rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), size, rng);
  return out;
}

struct Candidate {
  CandidateScore score;
  CartTree tree;
};

/// Strict "a is a better winner than b": smaller total Gini, then fewer
/// leaves, then shallower; the caller scans in (replicate, depth) order.
bool preferred(const CandidateScore& a, const CandidateScore& b) {
  if (a.total_gini != b.total_gini) return a.total_gini < b.total_gini;
  if (a.leaves != b.leaves) return a.leaves < b.leaves;
  return a.depth < b.depth;
}

}  // namespace

PedConfig PedConfig::resolved(std::size_t n_rows) const {
  PedConfig c = *this;
  if (n_rows == 0) throw ConfigError("dataset is empty");
  if (!c.t_s) c.t_s = std::max<std::size_t>(1, isqrt(n_rows));
  if (!c.t_d) c.t_d = std::max(3, floor_log2(*c.t_s));
  if (*c.t_s < 1 || *c.t_s > n_rows)
    throw ConfigError("t_s must lie in [1, N]; got " + std::to_string(*c.t_s) + " with N = " +
                      std::to_string(n_rows));
  if (*c.t_d < 3) throw ConfigError("t_d must be >= 3; got " + std::to_string(*c.t_d));
  if (c.t_n < 1) throw ConfigError("t_n must be >= 1");
  if (c.t_h < 1) throw ConfigError("t_h must be >= 1");
  if (c.eval_cap < 1) throw ConfigError("eval_cap must be >= 1");
  if (c.n > n_rows)
    throw ConfigError("subdata size n = " + std::to_string(c.n) + " exceeds N = " + std::to_string(n_rows));
  if (c.n < c.t_h)
    throw ConfigError("subdata size n = " + std::to_string(c.n) + " is below t_h = " + std::to_string(c.t_h));
  return c;
}

std::vector<StratumSummary> Partition::summaries() const {
  std::vector<StratumSummary> out;
  out.reserve(strata.size());
  for (const auto& s : strata) out.push_back(s.summary());
  return out;
}

std::vector<std::vector<std::size_t>> Partition::stratum_rows() const {
  std::vector<std::vector<std::size_t>> rows(strata.size());
  for (std::size_t l = 0; l < strata.size(); ++l) rows[l].reserve(strata[l].count);
  for (std::size_t i = 0; i < assignments.size(); ++i) rows[assignments[i]].push_back(i);
  return rows;
}

double total_gini(std::span<const StratumSummary> strata, std::size_t total) {
  if (total == 0) throw InvalidArgument("total_gini needs a positive total");
  double g = 0.0;
  for (const auto& s : strata) g += static_cast<double>(s.count) / static_cast<double>(total) * s.gini;
  return g;
}

double total_gini(std::span<const LeafStats> strata) {
  std::vector<StratumSummary> s;
  std::size_t total = 0;
  for (const auto& l : strata) {
    s.push_back(l.summary());
    total += l.count;
  }
  return total_gini(s, total);
}

Partition find_partition(const Dataset& data, const PedConfig& config) {
  const auto start = Clock::now();
  const PedConfig cfg = config.resolved(data.n_rows());
  const std::size_t n_rows = data.n_rows();
  const std::size_t cap = cfg.leaf_cap();
  if (cap < 1) throw LeafCapInfeasible(cap);

  const std::vector<std::size_t> eval_rows =
      uniform_rows(n_rows, cfg.eval_cap, derive_subseed(cfg.seed, "evalcap", 0));

  auto grow = [&](int replicate, int depth) {
    const Seed stream = derive_subseed(derive_subseed(cfg.seed, "part", static_cast<std::uint64_t>(replicate)),
                                       "depth", static_cast<std::uint64_t>(depth));
    const auto sample = uniform_rows(n_rows, *cfg.t_s, stream);
    TreeFitConfig tc;
    tc.max_depth = depth + 1;  // `depth` split levels below the root
    tc.mtry = data.n_features();
    tc.min_node_size = 1;
    tc.seed = derive_subseed(stream, "fit", 0);
    Candidate c;
    c.tree = fit_tree(data, sample, tc);
    const auto stats = c.tree.leaf_stats_on(data, eval_rows);
    c.score = CandidateScore{replicate, depth, c.tree.leaf_count(), total_gini(stats),
                             c.tree.leaf_count() <= cap};
    return c;
  };

  auto run_depths = [&](std::vector<int> depths) {
    std::vector<Candidate> out(static_cast<std::size_t>(cfg.t_n) * depths.size());
    parallel_for(out.size(), [&](std::size_t t) {
      const int replicate = static_cast<int>(t / depths.size()) + 1;
      out[t] = grow(replicate, depths[t % depths.size()]);
    });
    return out;
  };

  std::vector<int> depths;
  for (int d = 3; d <= *cfg.t_d; ++d) depths.push_back(d);
  std::vector<Candidate> candidates = run_depths(depths);

  auto pick = [&](const std::vector<Candidate>& cands, std::size_t offset, std::size_t& winner) {
    bool found = false;
    for (std::size_t i = offset; i < cands.size(); ++i) {
      if (!cands[i].score.admissible) continue;
      if (!found || preferred(cands[i].score, cands[winner].score)) {
        winner = i;
        found = true;
      }
    }
    return found;
  };

  std::size_t winner = 0;
  bool found = pick(candidates, 0, winner);
  // Every deep candidate exceeds the leaf cap: fall back to shallower trees,
  // ending with the single-stratum partition, which always fits.
  for (int depth = 2; !found && depth >= 0; --depth) {
    const std::size_t offset = candidates.size();
    auto extra = run_depths({depth});
    for (auto& c : extra) candidates.push_back(std::move(c));
    found = pick(candidates, offset, winner);
  }
  if (!found) throw LeafCapInfeasible(cap);

  Partition part;
  part.depth = candidates[winner].score.depth;
  part.winner = winner;
  part.candidates.reserve(candidates.size());
  for (const auto& c : candidates) part.candidates.push_back(c.score);
  part.source_tree = std::move(candidates[winner].tree);
  part.search_seconds = seconds_since(start);

  const auto assign_start = Clock::now();
  part.assignments.resize(n_rows);
  constexpr std::size_t block = 8192;
  parallel_for((n_rows + block - 1) / block, [&](std::size_t b) {
    const std::size_t end = std::min(n_rows, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i)
      part.assignments[i] = static_cast<std::uint32_t>(part.source_tree.leaf_of(data, i));
  });
  std::vector<std::vector<std::size_t>> counts(
      part.source_tree.leaf_count(), std::vector<std::size_t>(static_cast<std::size_t>(data.n_classes()), 0));
  for (std::size_t i = 0; i < n_rows; ++i)
    ++counts[part.assignments[i]][static_cast<std::size_t>(data.label(i))];
  for (std::size_t l = 0; l < counts.size(); ++l) {
    auto s = LeafStats::from_counts(std::move(counts[l]));
    if (s.count == 0) s.predicted_class = part.source_tree.leaves()[l].predicted_class;
    part.strata.push_back(std::move(s));
  }
  part.total_gini = total_gini(part.strata);
  part.scoring_seconds = seconds_since(assign_start);
  return part;
}

std::vector<StratumRow> stratum_report(const Partition& partition) {
  std::vector<StratumRow> rows;
  for (std::size_t l = 0; l < partition.strata.size(); ++l) {
    const auto& s = partition.strata[l];
    rows.push_back({l, s.count, s.gini, s.predicted_class});
  }
  return rows;
}

std::string render_stratum_table(std::span<const StratumRow> rows) {
  std::string out = "stratum      N_l     G_l  modal\n";
  char buf[128];
  std::size_t total = 0;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%7zu %8zu  %.4f  %5d\n", r.id, r.count, r.gini, r.modal_class);
    out += buf;
    total += r.count;
  }
  std::snprintf(buf, sizeof(buf), "  total %8zu\n", total);
  out += buf;
  return out;
}

nlohmann::json stratum_report_json(std::span<const StratumRow> rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"id", r.id}, {"count", r.count}, {"gini", r.gini}, {"modal_class", r.modal_class}});
  return j;
}

nlohmann::json to_json(const Partition& partition, bool include_timings) {
  nlohmann::json strata = nlohmann::json::array();
  for (std::size_t l = 0; l < partition.strata.size(); ++l) {
    const auto& s = partition.strata[l];
    strata.push_back({{"id", l},
                      {"count", s.count},
                      {"class_counts", s.class_counts},
                      {"gini", s.gini},
                      {"modal_class", s.predicted_class}});
  }
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : partition.candidates)
    candidates.push_back({{"replicate", c.replicate},
                          {"depth", c.depth},
                          {"leaves", c.leaves},
                          {"total_gini", c.total_gini},
                          {"admissible", c.admissible}});
  nlohmann::json j{{"depth", partition.depth},
                   {"strata_count", partition.stratum_count()},
                   {"total_gini", partition.total_gini},
                   {"winner", partition.winner},
                   {"strata", std::move(strata)},
                   {"candidates", std::move(candidates)},
                   {"tree", partition.source_tree.to_json()}};
  if (include_timings)
    j["timings"] = {{"search_s", partition.search_seconds}, {"assign_s", partition.scoring_seconds}};
  return j;
}

}  // namespace ped
