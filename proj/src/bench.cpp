#include "pedsub/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "pedsub/csv.hpp"
#include "pedsub/errors.hpp"
#include "pedsub/forest.hpp"
#include "pedsub/metrics.hpp"
#include "pedsub/sampler.hpp"

namespace ped {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string shortest(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string md_cell(std::string s) {
  std::replace(s.begin(), s.end(), '|', '/');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// Summary statistics are rendered identically in the CSV and markdown forms.
std::string pct(double v) { return fixed(100.0 * v, 4); }
std::string auc_text(double v) { return fixed(v, 4); }
std::string secs(double v) { return fixed(v, 3); }

struct ReplicateData {
  Dataset train;
  Dataset test;
};

struct CellOutcome {
  std::size_t n_subdata = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double auc = 0.0;
  double select_s = 0.0;
  double fit_s = 0.0;
  std::vector<double> class_shares;
};

CellOutcome fit_and_score(const Dataset& train, const Dataset& test, const ExperimentSpec& spec, Seed forest_seed,
                          double select_s) {
  CellOutcome out;
  out.select_s = select_s;
  out.n_subdata = train.n_rows();
  out.n_test = test.n_rows();
  const auto counts = train.class_counts();
  for (std::size_t c : counts)
    out.class_shares.push_back(static_cast<double>(c) / static_cast<double>(train.n_rows()));
  ForestConfig fc;
  fc.ntree = spec.ntree;
  fc.mtry = spec.mtry;
  fc.seed = forest_seed;
  const auto t0 = Clock::now();
  const ForestModel model = fit_forest(train, fc);
  out.fit_s = seconds_since(t0);
  const auto predicted = model.predict_class(test);
  const auto proba = model.predict_proba(test);
  const EvalReport report = evaluate(predicted, proba, test.labels(), test.n_classes());
  out.accuracy = report.accuracy;
  out.auc = report.auc;
  return out;
}

ResultRow make_row(const ExperimentSpec& spec, BenchMethod m, double fraction, std::size_t rep) {
  ResultRow row;
  row.experiment = spec.label;
  row.method = m;
  row.fraction = fraction;
  row.replicate = rep;
  return row;
}

void fill_row(ResultRow& row, const CellOutcome& c) {
  row.n_subdata = c.n_subdata;
  row.n_test = c.n_test;
  row.accuracy = c.accuracy;
  row.auc = c.auc;
  row.select_time_s = c.select_s;
  row.fit_time_s = c.fit_s;
  row.total_time_s = c.select_s + c.fit_s;
  row.class_shares = c.class_shares;
}

}  // namespace

std::string bench_method_name(BenchMethod method) {
  switch (method) {
    case BenchMethod::full: return "full";
    case BenchMethod::ped: return "ped";
    case BenchMethod::uniform: return "uniform";
    case BenchMethod::twinning: return "twinning";
  }
  return "unknown";
}

BenchMethod bench_method_from_name(const std::string& name) {
  if (name == "full") return BenchMethod::full;
  if (name == "ped") return BenchMethod::ped;
  if (name == "uniform") return BenchMethod::uniform;
  if (name == "twinning") return BenchMethod::twinning;
  throw ConfigError("unknown bench method '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (generator.has_value() == csv.has_value())
    throw ConfigError("experiment '" + label + "' needs exactly one of a generator or CSV paths");
  if (generator) generator->validate();
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (fractions.empty()) throw ConfigError("at least one fraction is required");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (ntree < 1) throw ConfigError("ntree must be >= 1");
  if (generator && (n_train < 2 || n_test < 1)) throw ConfigError("n_train must be >= 2 and n_test >= 1");
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::optional<ReplicateData> fixed_data;
  if (spec.csv) {
    CsvOptions opt;
    opt.target_column = spec.csv->target_column;
    opt.categorical_columns = {spec.csv->categorical_columns.begin(), spec.csv->categorical_columns.end()};
    Dataset train = load_csv(spec.csv->train, opt);
    opt.dictionaries = Dictionaries::of(train);
    opt.closed_label_set = true;
    Dataset test = load_csv(spec.csv->test, opt);
    if (!train.same_layout(test)) throw SchemaError("train and test CSVs have different schemas");
    fixed_data = ReplicateData{std::move(train), std::move(test)};
  }

  std::vector<ResultRow> rows;
  for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
    const Seed rep_seed = derive_subseed(spec.seed, "rep", rep);
    std::optional<ReplicateData> generated;
    if (spec.generator)
      generated = ReplicateData{generate(*spec.generator, spec.n_train, derive_subseed(rep_seed, "train", 0)),
                                generate(*spec.generator, spec.n_test, derive_subseed(rep_seed, "test", 0))};
    const ReplicateData& data = spec.generator ? *generated : *fixed_data;
    // Every method shares the forest seed of the replicate.
    const Seed forest_seed = derive_subseed(rep_seed, "forest", 0);

    for (BenchMethod m : spec.methods) {
      if (m == BenchMethod::full) {
        // The full fit does not depend on the fraction: one fit, one row per fraction.
        std::optional<CellOutcome> outcome;
        std::string error;
        try {
          outcome = fit_and_score(data.train, data.test, spec, forest_seed, 0.0);
        } catch (const std::exception& e) {
          error = std::string("full: ") + e.what();
        }
        for (double f : spec.fractions) {
          ResultRow row = make_row(spec, m, f, rep);
          if (outcome) fill_row(row, *outcome);
          else row.error = error;
          rows.push_back(std::move(row));
        }
        continue;
      }
      for (std::size_t fi = 0; fi < spec.fractions.size(); ++fi) {
        const double f = spec.fractions[fi];
        ResultRow row = make_row(spec, m, f, rep);
        const Seed cell_seed = derive_subseed(rep_seed, bench_method_name(m), fi);
        try {
          const auto n = static_cast<std::size_t>(std::floor(f * static_cast<double>(data.train.n_rows())));
          if (n < 1) throw InvalidArgument("fraction yields an empty subdata");
          const auto t0 = Clock::now();
          std::vector<std::size_t> picked;
          if (m == BenchMethod::ped) {
            PedConfig cfg = spec.ped_overrides;
            cfg.n = n;
            cfg.seed = cell_seed;
            picked = select_ped(data.train, cfg).row_indices;
          } else if (m == BenchMethod::uniform) {
            picked = select_uniform(data.train, n, cell_seed).row_indices;
          } else {
            picked = select_twinning(data.train, n, cell_seed).row_indices;
          }
          const double select_s = seconds_since(t0);
          fill_row(row, fit_and_score(data.train.subset(picked), data.test, spec, forest_seed, select_s));
        } catch (const std::exception& e) {
          row.error = bench_method_name(m) + ": " + e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  if (n == 0) return {std::nan(""), std::nan("")};
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidArgument("nothing to summarize");
  std::vector<std::string> experiments;
  for (const auto& r : rows)
    if (std::find(experiments.begin(), experiments.end(), r.experiment) == experiments.end())
      experiments.push_back(r.experiment);

  using Key = std::tuple<std::size_t, int, double>;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const auto e = static_cast<std::size_t>(
        std::find(experiments.begin(), experiments.end(), r.experiment) - experiments.begin());
    groups[{e, static_cast<int>(r.method), r.fraction}].push_back(&r);
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.experiment = experiments[std::get<0>(key)];
    s.method = static_cast<BenchMethod>(std::get<1>(key));
    s.fraction = std::get<2>(key);
    std::vector<double> acc, auc, sel, fit, tot;
    for (const ResultRow* r : members) {
      ++s.runs;
      if (!r->error.empty()) {
        ++s.errors;
        continue;
      }
      acc.push_back(r->accuracy);
      auc.push_back(r->auc);
      sel.push_back(r->select_time_s);
      fit.push_back(r->fit_time_s);
      tot.push_back(r->total_time_s);
    }
    std::tie(s.accuracy_mean, s.accuracy_sd) = mean_sd(acc);
    std::tie(s.auc_mean, s.auc_sd) = mean_sd(auc);
    s.select_time_mean = mean_sd(sel).first;
    s.fit_time_mean = mean_sd(fit).first;
    s.total_time_mean = mean_sd(tot).first;
    out.push_back(std::move(s));
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "experiment,method,fraction,replicate,n_subdata,n_test,accuracy,auc,class_shares,error\n";
  for (const auto& r : rows) {
    std::string shares;
    for (std::size_t k = 0; k < r.class_shares.size(); ++k) {
      if (k) shares += ';';
      shares += shortest(r.class_shares[k]);
    }
    os << csv_field(r.experiment) << ',' << bench_method_name(r.method) << ',' << shortest(r.fraction) << ','
       << r.replicate << ',' << r.n_subdata << ',' << r.n_test << ',';
    if (r.error.empty()) os << shortest(r.accuracy) << ',' << shortest(r.auc);
    else os << "NA,NA";
    os << ',' << shares << ',' << csv_field(r.error) << '\n';
  }
  return os.str();
}

std::string timings_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "experiment,method,fraction,replicate,select_time_s,fit_time_s,total_time_s\n";
  for (const auto& r : rows)
    os << csv_field(r.experiment) << ',' << bench_method_name(r.method) << ',' << shortest(r.fraction) << ','
       << r.replicate << ',' << shortest(r.select_time_s) << ',' << shortest(r.fit_time_s) << ','
       << shortest(r.total_time_s) << '\n';
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "experiment,method,fraction,runs,errors,accuracy_pct_mean,accuracy_pct_sd,auc_mean,auc_sd\n";
  for (const auto& s : rows)
    os << csv_field(s.experiment) << ',' << bench_method_name(s.method) << ',' << shortest(s.fraction) << ','
       << s.runs << ',' << s.errors << ',' << pct(s.accuracy_mean) << ',' << pct(s.accuracy_sd) << ','
       << auc_text(s.auc_mean) << ',' << auc_text(s.auc_sd) << '\n';
  return os.str();
}

std::string summary_markdown(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "| experiment | method | fraction | runs | errors | accuracy % | sd | AUC | sd |\n"
     << "|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& s : rows)
    os << "| " << md_cell(s.experiment) << " | " << bench_method_name(s.method) << " | " << shortest(s.fraction)
       << " | " << s.runs << " | " << s.errors << " | " << pct(s.accuracy_mean) << " | " << pct(s.accuracy_sd)
       << " | " << auc_text(s.auc_mean) << " | " << auc_text(s.auc_sd) << " |\n";
  return os.str();
}

std::string timing_markdown(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "| experiment | method | fraction | select s | fit s | total s |\n"
     << "|---|---|---:|---:|---:|---:|\n";
  for (const auto& s : rows)
    os << "| " << md_cell(s.experiment) << " | " << bench_method_name(s.method) << " | " << shortest(s.fraction)
       << " | " << secs(s.select_time_mean) << " | " << secs(s.fit_time_mean) << " | " << secs(s.total_time_mean)
       << " |\n";
  return os.str();
}

std::vector<ExperimentSpec> suite(const std::string& name, const std::string& scale, Seed seed) {
  if (scale != "desk" && scale != "paper") throw ConfigError("scale must be 'desk' or 'paper'");
  const bool paper = scale == "paper";
  std::vector<ExperimentSpec> specs;
  auto add = [&](std::string label, std::string_view preset, int p) -> ExperimentSpec& {
    ExperimentSpec s;
    s.generator = GeneratorSpec::preset(preset, p);
    s.n_train = paper ? 100'000 : 20'000;
    s.n_test = 10'000;
    s.replicates = paper ? 50 : 10;
    s.seed = derive_subseed(seed, label, 0);
    s.label = std::move(label);
    specs.push_back(std::move(s));
    return specs.back();
  };

  if (name == "table1") {
    add("waveform p=21", "waveform", 21);
    add("threenorm p=2", "threenorm", 2);
    add("threenorm p=20", "threenorm", 20);
    add("imbalanced threenorm p=2", "imbalanced_threenorm", 2);
    add("imbalanced threenorm p=20", "imbalanced_threenorm", 20);
    add("ringnorm p=2", "ringnorm", 2);
    add("twonorm p=2", "twonorm", 2);
  } else if (name == "binary") {
    for (const char* preset : {"bin-mvn0", "bin-mvn1", "bin-mix", "bin-t3"}) {
      auto& s = add(preset, preset, 0);
      s.methods = {BenchMethod::full, BenchMethod::ped, BenchMethod::uniform};
    }
  } else if (name == "softmax") {
    for (const char* preset : {"mult-mvn0", "mult-mvn1.5", "mult-mix", "mult-t3"}) add(preset, preset, 0);
  } else if (name == "radial") {
    auto& s = add("radial3", "radial3", 2);
    s.n_train = 10'000;
    s.fractions = {0.05};
    s.replicates = 20;
  } else if (name == "timing") {
    const int p = paper ? 100 : 20;
    const std::vector<std::size_t> sizes = paper ? std::vector<std::size_t>{100'000, 1'000'000}
                                                 : std::vector<std::size_t>{100'000, 400'000};
    for (std::size_t n : sizes) {
      auto& s = add("threenorm p=" + std::to_string(p) + " N=" + std::to_string(n), "threenorm", p);
      s.n_train = n;
      s.replicates = 1;
    }
  } else {
    throw ConfigError("unknown suite '" + name + "' (table1, binary, softmax, radial, timing)");
  }
  return specs;
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json methods = nlohmann::json::array();
  for (BenchMethod m : spec.methods) methods.push_back(bench_method_name(m));
  const PedConfig& o = spec.ped_overrides;
  nlohmann::json ped{{"t_s", nullptr}, {"t_d", nullptr}, {"t_n", o.t_n}, {"t_h", o.t_h}, {"eval_cap", o.eval_cap}};
  if (o.t_s) ped["t_s"] = *o.t_s;
  if (o.t_d) ped["t_d"] = *o.t_d;
  nlohmann::json j{{"label", spec.label},
                   {"n_train", spec.n_train},
                   {"n_test", spec.n_test},
                   {"fractions", spec.fractions},
                   {"methods", std::move(methods)},
                   {"replicates", spec.replicates},
                   {"seed", spec.seed.master},
                   {"ped", std::move(ped)},
                   {"ntree", spec.ntree},
                   {"mtry", spec.mtry}};
  if (spec.generator) j["generator"] = to_json(*spec.generator);
  if (spec.csv) {
    j["csv"] = {{"train", spec.csv->train.string()},
                {"test", spec.csv->test.string()},
                {"target", spec.csv->target_column},
                {"categorical", spec.csv->categorical_columns}};
  }
  return j;
}

}  // namespace ped
