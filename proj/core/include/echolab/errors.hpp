#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace echolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A series argument exceeds its radius of convergence.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A requested grid or Hilbert space exceeds a configured size cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to reach its tolerance.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}

  /// Residual after each iteration, in order.
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// An iterate left the physically admissible region.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    std::string s = "line " + std::to_string(line);
    if (column > 0) s += ", column " + std::to_string(column);
    return s + ": " + what;
  }

  int line_;
  int column_;
};

}  // namespace echolab
