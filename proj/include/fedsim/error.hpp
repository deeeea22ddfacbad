#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed external input (CSV, trace, task, record files).
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        detail_(what),
        line_(line) {}
  explicit ParseError(const std::string& what) : ParseError(what, 0) {}

  std::size_t line() const { return line_; }
  // Message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t line_;
};

class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row, std::size_t col)
      : Error("row " + std::to_string(row) + ", col " + std::to_string(col) + ": " + what),
        row_(row),
        col_(col) {}
  explicit IngestionError(const std::string& what) : Error(what), row_(0), col_(0) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ExistsError : public Error {
 public:
  using Error::Error;
};

class DispatchError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class TuningError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Transient failure; the runner queue re-enqueues runners that throw this.
class ResourceExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsim
