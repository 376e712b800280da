#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volasso {

// Base for every error raised by the library. The CLI maps these to exit code 1
// unless they are ConfigError (exit code 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidDataset : public Error {
 public:
  using Error::Error;
};

class ConstantColumn : public Error {
 public:
  explicit ConstantColumn(std::string column)
      : Error("ConstantColumn(" + column + "): sample standard deviation is zero"),
        column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// GARCH
class SeriesTooShort : public Error {
 public:
  using Error::Error;
};

class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

class NonPositiveVariance : public Error {
 public:
  using Error::Error;
};

// Wraps a per-column failure so callers can report which predictor failed.
class ColumnError : public Error {
 public:
  ColumnError(std::string column, const std::string& what)
      : Error("column '" + column + "': " + what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// Solvers
class RankDeficient : public Error {
 public:
  using Error::Error;
};

// Evaluation
class SplitTooSmall : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// Ingestion and serialization
class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& name)
      : Error("MissingColumn(" + name + ")"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class NonNumericCell : public Error {
 public:
  // row and col are 1-based file coordinates; row 1 is the header line.
  NonNumericCell(std::size_t row, std::size_t col, const std::string& cell)
      : Error("NonNumericCell(row " + std::to_string(row) + ", column " +
              std::to_string(col) + "): '" + cell + "'"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class NonMonotonicDates : public Error {
 public:
  NonMonotonicDates(std::size_t row, const std::string& what)
      : Error("NonMonotonicDates(row " + std::to_string(row) + "): " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EmptyAfterTransform : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace volasso
