// pedsub: generate data, select subdata, train/evaluate forests, run benchmark grids.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedsub/bench.hpp"
#include "pedsub/csv.hpp"
#include "pedsub/errors.hpp"
#include "pedsub/forest.hpp"
#include "pedsub/generators.hpp"
#include "pedsub/metrics.hpp"
#include "pedsub/parallel.hpp"
#include "pedsub/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Error raised inside a named stage; reported as "<stage>: <message>".
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name + ": " + e.what());
  }
}

struct Options {
  // shared
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  // data
  std::string family;
  int p = 0;
  std::size_t n = 0;
  double fraction = 0.0;
  std::string in;
  std::string train;
  std::string test;
  std::string target;
  std::vector<std::string> categorical;
  // selection
  std::string method = "ped";
  std::size_t t_s = 0;
  int t_d = 0;
  int t_n = 10;
  std::size_t t_h = 5;
  std::size_t eval_cap = 5'000'000;
  // forest
  std::size_t ntree = 100;
  std::size_t mtry = 0;
  // bench
  std::string suite;
  std::string scale = "desk";
  std::size_t replicates = 0;
  std::vector<double> fractions;
  std::vector<std::string> methods;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Flag values of one subcommand as recorded in every metadata file.
/// --threads and --config are left out: neither changes any output.
json flag_set(const CLI::App& sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "threads" || name == "config") continue;
    if (opt->count() == 0) {
      const std::string def = opt->get_default_str();
      flags[name] = def.empty() ? json(nullptr) : json(def);
    } else if (opt->get_expected_max() > 1) {
      flags[name] = opt->results();
    } else {
      flags[name] = opt->results().back();
    }
  }
  return flags;
}

json metadata(const CLI::App& sub, const Options& o) {
  return {{"tool", "pedsub"}, {"version", kVersion}, {"subcommand", sub.get_name()}, {"seed", o.seed},
          {"flags", flag_set(sub)}};
}

struct Loaded {
  ped::Dataset data;
  std::string target;
};

/// Reads a CSV, taking target, categorical columns and dictionaries from its
/// sidecar when one exists; flags override the sidecar.
Loaded load_input(const std::string& path, const Options& o, const ped::Dictionaries* dictionaries = nullptr) {
  ped::CsvOptions opt;
  const fs::path side = ped::sidecar_path(path);
  if (fs::exists(side)) {
    const auto schema = ped::schema_from_json(ped::read_json(side));
    opt.target_column = schema.target_column;
    opt.categorical_columns = schema.categorical_columns;
    opt.dictionaries = schema.dictionaries;
  }
  if (!o.target.empty()) opt.target_column = o.target;
  for (const auto& c : o.categorical) opt.categorical_columns.insert(c);
  if (opt.target_column.empty())
    throw ped::ConfigError("no --target given and no sidecar for " + path);
  if (dictionaries) {
    opt.dictionaries = *dictionaries;
    opt.closed_label_set = true;
  }
  return {ped::load_csv(path, opt), opt.target_column};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ped::IoError("cannot write " + path.string());
  f << text;
  if (!f) throw ped::IoError("write failed for " + path.string());
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p.replace_extension();
  return p.string() + suffix;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// ---------------------------------------------------------------- generate

int cmd_generate(const CLI::App& sub, const Options& o) {
  const auto spec = stage("generate", [&] { return ped::GeneratorSpec::preset(o.family, o.p); });
  const auto data = stage("generate", [&] { return ped::generate(spec, o.n, ped::Seed{o.seed}); });
  stage("write", [&] {
    const fs::path out = o.out;
    ensure_parent(out);
    ped::write_csv(data, out, "y");
    json meta = metadata(sub, o);
    meta["schema"] = ped::schema_to_json(data, "y");
    meta["generator"] = ped::to_json(spec);
    ped::write_json(meta, ped::sidecar_path(out));
    return 0;
  });
  std::cout << data.n_rows() << " rows written to " << o.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ select

int cmd_select(const CLI::App& sub, const Options& o) {
  const Loaded in = stage("load", [&] { return load_input(o.in, o); });
  const std::size_t N = in.data.n_rows();
  std::size_t n = o.n;
  if (sub.count("--fraction")) n = static_cast<std::size_t>(std::floor(o.fraction * static_cast<double>(N)));
  if (n == 0) throw StageError("select: subdata size is 0");

  const auto method = ped::method_from_name(o.method);
  const auto t0 = Clock::now();
  json selection;
  json timings;
  ped::Subdata subdata;
  if (method == ped::SubdataMethod::ped) {
    ped::PedConfig cfg;
    cfg.n = n;
    if (o.t_s > 0) cfg.t_s = o.t_s;
    if (o.t_d > 0) cfg.t_d = o.t_d;
    cfg.t_n = o.t_n;
    cfg.t_h = o.t_h;
    cfg.eval_cap = o.eval_cap;
    cfg.seed = ped::Seed{o.seed};
    const ped::PedRun run = stage("select", [&] { return ped::run_ped(in.data, cfg); });
    subdata = run.subdata;
    selection = ped::to_json(run, false);
    timings = {{"partition_s", run.partition_seconds},
               {"search_s", run.partition.search_seconds},
               {"scoring_s", run.partition.scoring_seconds},
               {"allocation_s", run.allocation_seconds},
               {"sampling_s", run.sampling_seconds}};
    std::cout << ped::render_stratum_table(ped::stratum_report(run.partition));
  } else {
    subdata = stage("select", [&] {
      return method == ped::SubdataMethod::uniform ? ped::select_uniform(in.data, n, ped::Seed{o.seed})
                                                   : ped::select_twinning(in.data, n, ped::Seed{o.seed});
    });
    selection = {{"method", o.method}, {"n", n}};
  }
  timings["total_s"] = seconds_since(t0);
  selection["row_indices"] = subdata.row_indices;

  stage("write", [&] {
    const fs::path out = o.out;
    ensure_parent(out);
    const auto sub_data = in.data.subset(subdata.row_indices);
    ped::write_csv(sub_data, out, in.target);
    json meta = metadata(sub, o);
    meta["schema"] = ped::schema_to_json(sub_data, in.target);
    meta["input"] = {{"path", o.in}, {"n_rows", N}};
    meta["selection"] = std::move(selection);
    ped::write_json(meta, ped::sidecar_path(out));
    ped::write_json(timings, with_suffix(out, ".timing.json"));
    return 0;
  });
  std::cout << subdata.size() << " of " << N << " rows selected (" << o.method << ") -> " << o.out << "\n";
  return 0;
}

// -------------------------------------------------------------- train-eval

int cmd_train_eval(const CLI::App& sub, const Options& o) {
  const Loaded train = stage("load train", [&] { return load_input(o.train, o); });
  const auto dict = ped::Dictionaries::of(train.data);
  const Loaded test = stage("load test", [&] { return load_input(o.test, o, &dict); });
  if (!train.data.same_layout(test.data)) throw StageError("load test: schema differs from the training set");

  ped::ForestConfig fc;
  fc.ntree = o.ntree;
  fc.mtry = o.mtry;
  fc.seed = ped::Seed{o.seed};
  auto t0 = Clock::now();
  const auto model = stage("fit", [&] { return ped::fit_forest(train.data, fc); });
  const double fit_s = seconds_since(t0);
  t0 = Clock::now();
  const auto report = stage("evaluate", [&] {
    const auto predicted = model.predict_class(test.data);
    const auto proba = model.predict_proba(test.data);
    return ped::evaluate(predicted, proba, test.data.labels(), test.data.n_classes());
  });
  const double eval_s = seconds_since(t0);

  stage("write", [&] {
    const fs::path out = o.out;
    ensure_parent(out);
    json j = ped::to_json(report);
    j["metadata"] = metadata(sub, o);
    j["n_train"] = train.data.n_rows();
    j["class_names"] = test.data.class_names();
    ped::write_json(j, out);
    ped::write_json({{"fit_s", fit_s}, {"evaluate_s", eval_s}}, with_suffix(out, ".timing.json"));
    return 0;
  });
  std::cout << "accuracy " << report.accuracy << "\n";
  if (std::isnan(report.auc)) std::cout << "auc NA\n";
  else std::cout << "auc " << report.auc << "\n";
  return 0;
}

// ------------------------------------------------------------------- bench

std::vector<ped::ExperimentSpec> bench_specs(const CLI::App& sub, const Options& o) {
  std::vector<ped::ExperimentSpec> specs;
  const int sources = !o.suite.empty() + !o.family.empty() + !o.train.empty();
  if (sources != 1) throw ped::ConfigError("give exactly one of --suite, --family or --train/--test");
  if (!o.suite.empty()) {
    specs = ped::suite(o.suite, o.scale, ped::Seed{o.seed});
  } else if (!o.family.empty()) {
    ped::ExperimentSpec s;
    s.generator = ped::GeneratorSpec::preset(o.family, o.p);
    s.label = o.family + (o.p > 0 ? " p=" + std::to_string(o.p) : "");
    if (o.scale == "paper") {
      s.n_train = 100'000;
      s.replicates = 50;
    }
    s.seed = ped::Seed{o.seed};
    specs.push_back(std::move(s));
  } else {
    if (o.test.empty() || o.target.empty()) throw ped::ConfigError("--train needs --test and --target");
    ped::ExperimentSpec s;
    s.csv = ped::CsvSource{o.train, o.test, o.target, o.categorical};
    s.label = fs::path(o.train).stem().string();
    s.seed = ped::Seed{o.seed};
    specs.push_back(std::move(s));
  }
  for (auto& s : specs) {
    if (o.replicates > 0) s.replicates = o.replicates;
    if (!o.fractions.empty()) s.fractions = o.fractions;
    if (!o.methods.empty()) {
      s.methods.clear();
      for (const auto& m : o.methods) s.methods.push_back(ped::bench_method_from_name(m));
    }
    if (o.n_train > 0) s.n_train = o.n_train;
    if (o.n_test > 0) s.n_test = o.n_test;
    s.ntree = o.ntree;
    s.mtry = o.mtry;
    if (o.t_s > 0) s.ped_overrides.t_s = o.t_s;
    if (o.t_d > 0) s.ped_overrides.t_d = o.t_d;
    s.ped_overrides.t_n = o.t_n;
    s.ped_overrides.t_h = o.t_h;
    s.ped_overrides.eval_cap = o.eval_cap;
    s.validate();
  }
  (void)sub;
  return specs;
}

int cmd_bench(const CLI::App& sub, const Options& o) {
  const auto specs = stage("config", [&] { return bench_specs(sub, o); });
  std::vector<ped::ResultRow> rows;
  for (const auto& spec : specs) {
    std::cerr << "[bench] " << spec.label << " (" << spec.replicates << " replicates)\n";
    auto part = stage("run " + spec.label, [&] { return ped::run_experiment(spec); });
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const auto summary = ped::summarize(rows);
  const std::size_t failed =
      static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.error.empty(); }));

  stage("write", [&] {
    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_text(dir / "results.csv", ped::results_csv(rows));
    write_text(dir / "summary.csv", ped::summary_csv(summary));
    write_text(dir / "summary.md", ped::summary_markdown(summary));
    write_text(dir / "timings.csv", ped::timings_csv(rows));
    write_text(dir / "summary_timings.md", ped::timing_markdown(summary));
    json manifest = metadata(sub, o);
    manifest["experiments"] = json::array();
    for (const auto& spec : specs) manifest["experiments"].push_back(ped::to_json(spec));
    manifest["rows"] = rows.size();
    manifest["failed_cells"] = failed;
    manifest["outputs"] = {"results.csv", "summary.csv", "summary.md", "timings.csv", "summary_timings.md"};
    ped::write_json(manifest, dir / "manifest.json");
    return 0;
  });
  std::cout << ped::summary_markdown(summary);
  if (failed > 0) {
    for (const auto& r : rows)
      if (!r.error.empty()) std::cerr << "[bench] " << r.experiment << " failed cell: " << r.error << "\n";
  }
  return failed == rows.size() ? 1 : 0;
}

// -------------------------------------------------------------- arguments

std::string flag_token(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Removes every occurrence of `flag` (and its values) from args.
void strip_flag(std::vector<std::string>& args, const std::string& flag) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag) {
      while (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) ++i;
      continue;
    }
    if (args[i].rfind(flag + "=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  args = std::move(kept);
}

/// Splices a --config JSON object into the argument list; its keys replace any
/// occurrence of the same flag given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  const json cfg = ped::read_json(*path);
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = flag_token(key);
    strip_flag(args, flag);
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    auto push_scalar = [&](const json& v) { args.push_back(v.is_string() ? v.get<std::string>() : v.dump()); };
    if (value.is_array()) {
      for (const auto& v : value) push_scalar(v);
    } else {
      push_scalar(value);
    }
  }
  return args;
}

void add_seed_threads_config(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
  sub->add_option("--config", "JSON file whose keys override flags of the same name");
}

void add_ped_flags(CLI::App* sub, Options& o) {
  sub->add_option("--t-s", o.t_s, "Partition subsample size (0 = floor(sqrt(N)))")->capture_default_str();
  sub->add_option("--t-d", o.t_d, "Deepest candidate depth (0 = max(3, floor(log2 t_s)))")->capture_default_str();
  sub->add_option("--t-n", o.t_n, "Candidate trees per depth")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--t-h", o.t_h, "Minimum per-stratum sample")->capture_default_str();
  sub->add_option("--eval-cap", o.eval_cap, "Rows used to score a candidate")->capture_default_str();
}

void add_forest_flags(CLI::App* sub, Options& o) {
  sub->add_option("--ntree", o.ntree, "Trees per forest")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--mtry", o.mtry, "Features tried per split (0 = floor(p/3) if p >= 5 else p)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PED subdata selection for classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto* gen = app.add_subcommand("generate", "Simulate a dataset to CSV");
  gen->add_option("--family", o.family, "Generator preset")->required();
  gen->add_option("--n", o.n, "Rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--p", o.p, "Features (0 = family default)")->capture_default_str();
  gen->add_option("--out", o.out, "Output CSV")->required();
  add_seed_threads_config(gen, o);

  auto* sel = app.add_subcommand("select", "Select subdata from a CSV");
  sel->add_option("--in", o.in, "Input CSV")->required()->check(CLI::ExistingFile);
  sel->add_option("--target", o.target, "Label column (default: from the sidecar)");
  sel->add_option("--categorical", o.categorical, "Categorical feature columns")->delimiter(',');
  sel->add_option("--method", o.method, "ped, uniform or twinning")
      ->capture_default_str()
      ->check(CLI::IsMember({"ped", "uniform", "twinning"}));
  auto* n_opt = sel->add_option("--n", o.n, "Subdata size")->check(CLI::PositiveNumber);
  auto* f_opt = sel->add_option("--fraction", o.fraction, "Subdata size as a fraction of N")
                    ->check(CLI::Range(0.0, 1.0));
  n_opt->excludes(f_opt);
  sel->add_option("--out", o.out, "Output CSV")->required();
  add_ped_flags(sel, o);
  add_seed_threads_config(sel, o);

  auto* te = app.add_subcommand("train-eval", "Fit a random forest and evaluate it");
  te->add_option("--train", o.train, "Training CSV")->required()->check(CLI::ExistingFile);
  te->add_option("--test", o.test, "Test CSV")->required()->check(CLI::ExistingFile);
  te->add_option("--target", o.target, "Label column (default: from the sidecar)");
  te->add_option("--categorical", o.categorical, "Categorical feature columns")->delimiter(',');
  te->add_option("--out", o.out, "Report JSON")->required();
  add_forest_flags(te, o);
  add_seed_threads_config(te, o);

  auto* bench = app.add_subcommand("bench", "Run a benchmark grid");
  bench->add_option("--suite", o.suite, "table1, binary, softmax, radial or timing")
      ->check(CLI::IsMember({"table1", "binary", "softmax", "radial", "timing"}));
  bench->add_option("--family", o.family, "Single generator experiment instead of a suite");
  bench->add_option("--p", o.p, "Features for --family (0 = family default)")->capture_default_str();
  bench->add_option("--train", o.train, "Training CSV for a fixed-data experiment")->check(CLI::ExistingFile);
  bench->add_option("--test", o.test, "Test CSV for a fixed-data experiment")->check(CLI::ExistingFile);
  bench->add_option("--target", o.target, "Label column of --train/--test");
  bench->add_option("--categorical", o.categorical, "Categorical feature columns")->delimiter(',');
  bench->add_option("--scale", o.scale, "desk or paper")
      ->capture_default_str()
      ->check(CLI::IsMember({"desk", "paper"}));
  bench->add_option("--replicates", o.replicates, "Override replicates (0 = suite value)")->capture_default_str();
  bench->add_option("--fraction", o.fractions, "Override subdata fractions")->delimiter(',');
  bench->add_option("--method", o.methods, "Override methods: full, ped, uniform, twinning")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "ped", "uniform", "twinning"}));
  bench->add_option("--n-train", o.n_train, "Override training size (0 = suite value)")->capture_default_str();
  bench->add_option("--n-test", o.n_test, "Override test size (0 = suite value)")->capture_default_str();
  bench->add_option("--out", o.out, "Output directory")->required();
  add_ped_flags(bench, o);
  add_forest_flags(bench, o);
  add_seed_threads_config(bench, o);

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "pedsub: --config: " << e.what() << "\n";
    return 2;
  }

  try {
    ped::set_max_threads(o.threads);
    if (*gen) return cmd_generate(*gen, o);
    if (*sel) {
      if (!*n_opt && !*f_opt) {
        std::cerr << "pedsub select: one of --n or --fraction is required\n" << sel->help();
        return 2;
      }
      return cmd_select(*sel, o);
    }
    if (*te) return cmd_train_eval(*te, o);
    if (*bench) return cmd_bench(*bench, o);
  } catch (const StageError& e) {
    std::cerr << "pedsub " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pedsub " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}
