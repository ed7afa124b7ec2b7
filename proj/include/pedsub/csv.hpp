#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedsub/dataset.hpp"

namespace ped {

/// Label and level dictionaries used to encode a CSV. When supplied to
/// `load_csv` they fix the code of each known string; strings not in a
/// dictionary are appended in first-appearance order.
struct Dictionaries {
  std::vector<std::string> class_names;
  std::map<std::string, std::vector<std::string>> levels;  // by column name

  static Dictionaries of(const Dataset& data);
};

struct CsvOptions {
  std::string target_column;
  std::set<std::string> categorical_columns;
  std::optional<Dictionaries> dictionaries;
  /// Refuse labels missing from `dictionaries->class_names` (test sets).
  bool closed_label_set = false;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Header `<features...>,<target>`; categorical cells and labels are written
/// as their dictionary strings, reals in shortest round-trip form.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_column = "y");
void write_csv(const Dataset& data, std::span<const std::size_t> rows,
               const std::filesystem::path& path, const std::string& target_column = "y");

/// `d.csv` -> `d.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

nlohmann::json schema_to_json(const Dataset& data, const std::string& target_column);
/// Reads the dictionaries and target column recorded by `schema_to_json`.
struct SidecarSchema {
  std::string target_column;
  std::set<std::string> categorical_columns;
  Dictionaries dictionaries;
};
SidecarSchema schema_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace ped
