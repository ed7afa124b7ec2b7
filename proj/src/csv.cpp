#include "pedsub/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "pedsub/errors.hpp"

namespace ped {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

/// String -> code map that grows in first-appearance order.
class Encoder {
 public:
  explicit Encoder(std::vector<std::string> names = {}, bool closed = false)
      : names_(std::move(names)), closed_(closed) {
    for (std::size_t i = 0; i < names_.size(); ++i) codes_.emplace(names_[i], static_cast<int>(i));
  }

  /// -1 for an unknown string in a closed dictionary.
  int encode(const std::string& s) {
    if (auto it = codes_.find(s); it != codes_.end()) return it->second;
    if (closed_) return -1;
    const int code = static_cast<int>(names_.size());
    names_.push_back(s);
    codes_.emplace(s, code);
    return code;
  }

  std::vector<std::string> take() { return std::move(names_); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> codes_;
  bool closed_;
};

}  // namespace

Dictionaries Dictionaries::of(const Dataset& data) {
  Dictionaries d;
  d.class_names = data.class_names();
  for (const auto& col : data.schema())
    if (col.is_categorical()) d.levels[col.name] = col.levels;
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "", "'" + path.string() + "' has no header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::ptrdiff_t target = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == options.target_column) target = static_cast<std::ptrdiff_t>(c);
  if (target < 0) throw SchemaError("unknown column '" + options.target_column + "' (target)");
  for (const auto& name : options.categorical_columns) {
    bool found = false;
    for (const auto& h : header) found = found || h == name;
    if (!found) throw SchemaError("unknown column '" + name + "' (categorical)");
    if (name == options.target_column)
      throw SchemaError("column '" + name + "' is the target and cannot be a feature");
  }
  if (header.size() < 2) throw SchemaError("'" + path.string() + "' has no feature columns");

  const auto& dicts = options.dictionaries;
  Encoder labels_enc(dicts ? dicts->class_names : std::vector<std::string>{},
                     options.closed_label_set && dicts.has_value());

  struct FeatureColumn {
    std::size_t source = 0;
    ColumnSchema schema;
    Encoder encoder;
    std::vector<double> values;
  };
  std::vector<FeatureColumn> features;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == target) continue;
    FeatureColumn fc;
    fc.source = c;
    fc.schema.name = header[c];
    if (options.categorical_columns.count(header[c]) != 0) {
      fc.schema.kind = ColumnKind::categorical;
      if (dicts) {
        if (auto it = dicts->levels.find(header[c]); it != dicts->levels.end())
          fc.encoder = Encoder(it->second);
      }
    }
    features.push_back(std::move(fc));
  }

  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(row, "", "row " + std::to_string(row) + ": expected " +
                                    std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    const std::string label = trim(fields[static_cast<std::size_t>(target)]);
    const int code = labels_enc.encode(label);
    if (code < 0)
      throw ParseError(row, options.target_column,
                       "row " + std::to_string(row) + ", column '" + options.target_column +
                           "': unknown class '" + label + "'");
    labels.push_back(code);
    for (auto& fc : features) {
      std::string cell = trim(fields[fc.source]);
      if (fc.schema.is_categorical()) {
        fc.values.push_back(fc.encoder.encode(cell));
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto res = std::from_chars(first, last, v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last)
        throw ParseError(row, fc.schema.name,
                         "row " + std::to_string(row) + ", column '" + fc.schema.name +
                             "': cannot parse '" + cell + "' as a number");
      fc.values.push_back(v);
    }
  }
  if (labels.empty()) throw ParseError(0, "", "'" + path.string() + "' has no data rows");

  auto class_names = labels_enc.take();
  if (class_names.size() < 2)
    throw SchemaError("target column '" + options.target_column + "' is constant (K=1)");

  std::vector<ColumnSchema> schema;
  std::vector<std::vector<double>> columns;
  for (auto& fc : features) {
    if (fc.schema.is_categorical()) {
      fc.schema.levels = fc.encoder.take();
      if (fc.schema.levels.size() < 2)
        throw SchemaError("categorical column '" + fc.schema.name + "' has fewer than 2 levels");
    }
    schema.push_back(std::move(fc.schema));
    columns.push_back(std::move(fc.values));
  }
  const int k = static_cast<int>(class_names.size());
  return Dataset(std::move(schema), std::move(columns), std::move(labels), k, std::move(class_names));
}

void write_csv(const Dataset& data, std::span<const std::size_t> rows,
               const std::filesystem::path& path, const std::string& target_column) {
  std::string out;
  for (const auto& col : data.schema()) {
    out += quote_if_needed(col.name);
    out += ',';
  }
  out += quote_if_needed(target_column);
  out += '\n';
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < data.n_features(); ++c) {
      const auto& col = data.column_schema(c);
      const double v = data.value(r, c);
      if (col.is_categorical()) out += quote_if_needed(col.levels[static_cast<std::size_t>(v)]);
      else append_number(out, v);
      out += ',';
    }
    out += quote_if_needed(data.class_names()[static_cast<std::size_t>(data.label(r))]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << out;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_column) {
  std::vector<std::size_t> rows(data.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  write_csv(data, rows, path, target_column);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

nlohmann::json schema_to_json(const Dataset& data, const std::string& target_column) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : data.schema()) {
    nlohmann::json c{{"name", col.name},
                     {"kind", col.is_categorical() ? "categorical" : "continuous"}};
    if (col.is_categorical()) c["levels"] = col.levels;
    cols.push_back(std::move(c));
  }
  return {{"columns", std::move(cols)},
          {"target", target_column},
          {"classes", data.class_names()},
          {"n_rows", data.n_rows()}};
}

SidecarSchema schema_from_json(const nlohmann::json& j) {
  SidecarSchema s;
  try {
    const auto& schema = j.contains("schema") ? j.at("schema") : j;
    s.target_column = schema.at("target").get<std::string>();
    s.dictionaries.class_names = schema.at("classes").get<std::vector<std::string>>();
    for (const auto& c : schema.at("columns")) {
      if (c.at("kind").get<std::string>() == "categorical") {
        const auto name = c.at("name").get<std::string>();
        s.categorical_columns.insert(name);
        s.dictionaries.levels[name] = c.at("levels").get<std::vector<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema metadata: ") + e.what());
  }
  return s;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, "", "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace ped
