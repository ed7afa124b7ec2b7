#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ped {

/// Base of every error raised by the library. `kind()` lets callers (the CLI
/// in particular) map failures to stage names without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    io,
    parse,
    schema,
    config,
    leaf_cap_infeasible,
    infeasible_allocation,
    invalid_argument,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Kind::io, what) {}
};

/// Unparsable cell. Carries the 1-based data row and the column name.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : Error(Kind::parse, what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(Kind::schema, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Kind::config, what) {}
};

/// No candidate partition has at most `cap` leaves.
class LeafCapInfeasible : public Error {
 public:
  explicit LeafCapInfeasible(std::size_t cap)
      : Error(Kind::leaf_cap_infeasible,
              "leaf cap infeasible: no candidate tree has at most " + std::to_string(cap) +
                  " leaves"),
        cap_(cap) {}

  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class InfeasibleAllocation : public Error {
 public:
  explicit InfeasibleAllocation(const std::string& what)
      : Error(Kind::infeasible_allocation, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(Kind::invalid_argument, what) {}
};

}  // namespace ped
