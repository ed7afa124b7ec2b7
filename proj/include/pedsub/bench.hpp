#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedsub/generators.hpp"
#include "pedsub/partition.hpp"
#include "pedsub/seed.hpp"

namespace ped {

enum class BenchMethod { full, ped, uniform, twinning };

std::string bench_method_name(BenchMethod method);
BenchMethod bench_method_from_name(const std::string& name);

/// Data source of an experiment: a generator, or fixed train/test CSVs.
struct CsvSource {
  std::filesystem::path train;
  std::filesystem::path test;
  std::string target_column;
  std::vector<std::string> categorical_columns;
};

struct ExperimentSpec {
  std::string label;  // row label in summaries, e.g. "threenorm p=2"
  std::optional<GeneratorSpec> generator;
  std::optional<CsvSource> csv;
  std::size_t n_train = 20'000;
  std::size_t n_test = 10'000;
  std::vector<double> fractions{0.01, 0.05};
  std::vector<BenchMethod> methods{BenchMethod::full, BenchMethod::ped, BenchMethod::uniform,
                                   BenchMethod::twinning};
  std::size_t replicates = 10;
  Seed seed{};
  /// t_s, t_d, t_n, t_h, eval_cap overrides; n is set per fraction.
  PedConfig ped_overrides{};
  std::size_t ntree = 100;
  std::size_t mtry = 0;

  void validate() const;
};

struct ResultRow {
  std::string experiment;
  BenchMethod method = BenchMethod::full;
  double fraction = 0.0;
  std::size_t replicate = 0;
  std::size_t n_subdata = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double auc = 0.0;
  double select_time_s = 0.0;
  double fit_time_s = 0.0;
  double total_time_s = 0.0;
  std::string error;  // nonempty for a failed cell
  /// Share of each class in the selected subdata.
  std::vector<double> class_shares;
};

/// One row per (method, fraction, replicate). Failed cells become error rows.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

struct SummaryRow {
  std::string experiment;
  BenchMethod method = BenchMethod::full;
  double fraction = 0.0;
  std::size_t runs = 0;
  std::size_t errors = 0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double auc_mean = 0.0;
  double auc_sd = 0.0;
  double select_time_mean = 0.0;
  double fit_time_mean = 0.0;
  double total_time_mean = 0.0;
};

/// Grouped by (experiment, method, fraction) in first-seen experiment order,
/// then method order, then ascending fraction. Sample sd; 0 for one run.
/// Throws InvalidArgument on empty input.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Accuracy/AUC columns only (reproducible); timings go to the timing files.
std::string results_csv(const std::vector<ResultRow>& rows);
std::string timings_csv(const std::vector<ResultRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_markdown(const std::vector<SummaryRow>& rows);
std::string timing_markdown(const std::vector<SummaryRow>& rows);

/// Frozen experiment grids: table1, binary, softmax, radial, timing.
/// `scale` is "desk" or "paper".
std::vector<ExperimentSpec> suite(const std::string& name, const std::string& scale, Seed seed);

nlohmann::json to_json(const ExperimentSpec& spec);

/// Sample mean and sd (n-1 denominator, 0 for a single value), NaNs skipped.
std::pair<double, double> mean_sd(const std::vector<double>& values);

}  // namespace ped
