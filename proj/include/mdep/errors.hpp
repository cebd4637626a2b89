#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace mdep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV input. `row` is the 1-based line number, `column` the 1-based
/// cell index (0 when the whole row is at fault).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Raised when a gapped index set (pairs or averaging window) is empty, which
/// means n is too small for the requested lag order.
class EmptyIndexSetError : public Error {
 public:
  using Error::Error;
};

/// Variance estimate of the test numerator is not strictly positive.
class DegenerateVarianceError : public Error {
 public:
  explicit DegenerateVarianceError(double value)
      : Error("variance estimate is not positive (" + format(value) +
              "); the sample is degenerate or too small for the lag order"),
        value_(value) {}
  double value() const noexcept { return value_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }
  double value_;
};

class NotPositiveDefiniteError : public Error {
 public:
  /// `minor` is the 1-based index of the first leading minor that failed.
  explicit NotPositiveDefiniteError(std::size_t minor)
      : Error("matrix is not positive definite (leading minor " + std::to_string(minor) + ")"),
        minor_(minor) {}
  std::size_t minor() const noexcept { return minor_; }

 private:
  std::size_t minor_;
};

}  // namespace mdep
