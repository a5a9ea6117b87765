#pragma once

// Tagged echo samples shared by the solver, the oracle, the fitter and the
// command-line front end, plus the versioned CSV representation.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace echolab {

enum class ErrorMode { none, coherent, incoherent, both };

std::string to_string(ErrorMode mode);
/// Accepts the names produced by to_string(). Throws DomainError.
ErrorMode parse_error_mode(const std::string& name);

/// Where a sample came from.
enum class Source { closed_form, saddle, oracle, external };

std::string to_string(Source source);
Source parse_source(const std::string& name);

struct EchoRow {
  Source source = Source::closed_form;
  ErrorMode mode = ErrorMode::incoherent;
  int n = 1;
  double t = 0.0;
  double F = 1.0;
  std::optional<double> stderr_F;

  bool operator==(const EchoRow&) const = default;
};

struct EchoTable {
  std::vector<EchoRow> rows;
  /// Free-form provenance (J, V, solver settings, seed, ...).
  std::map<std::string, std::string> metadata;

  bool operator==(const EchoTable&) const = default;

  /// Rows matching (mode, n), in table order.
  std::vector<EchoRow> series(ErrorMode mode, int n) const;

  /// Distinct (mode, n) keys in order of first appearance.
  std::vector<std::pair<ErrorMode, int>> keys() const;

  /// Throws DomainError unless t >= 0 and strictly increasing per (mode, n)
  /// series and F lies in (0, 1 + slack].
  void validate(double slack = 1e-6) const;
};

/// First line of every echo CSV file.
inline constexpr const char* kEchoCsvVersion = "# echolab-echo-table v1";

void write_echo_csv(const EchoTable& table, std::ostream& out);
void write_echo_csv(const EchoTable& table, const std::filesystem::path& path);

/// Throws ParseError with the offending line and column.
EchoTable read_echo_csv(std::istream& in);
EchoTable read_echo_csv(const std::filesystem::path& path);

}  // namespace echolab
