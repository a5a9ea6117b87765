#pragma once

// Run configuration shared by every subcommand.
//
// Values come from three layers, later layers winning:
//   1. built-in defaults (the reference parameter set below),
//   2. an INI file given with --config,
//   3. command-line flags.
// The output directory is --output, else io.output from the file, else
// $ECHOLAB_OUTPUT_ROOT/<command>, else ./<command>.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "echolab/calibrate.hpp"
#include "echolab/echo_table.hpp"
#include "echolab/scramblon_model.hpp"
#include "echolab/syk_saddle.hpp"

namespace echolab::cli {

inline constexpr const char* kOutputRootEnv = "ECHOLAB_OUTPUT_ROOT";

enum class FitKind { incoherent, two_round };

std::string to_string(FitKind kind);
FitKind parse_fit_kind(const std::string& name);

struct RunConfig {
  // [model]
  ErrorMode mode = ErrorMode::incoherent;
  double J = 1.0;
  double V = 0.01;
  scramblon::ScramblonParams scramblon =
      scramblon::ScramblonParams::syk(0.866, 5.85e-4, 5.85e-4, 1.37);

  // [grid]
  /// Empty means the command's default set.
  std::vector<int> n_list;
  std::vector<double> t_list;
  double dt_target = 0.025;

  // [solver]
  saddle::SolverOptions solver;

  // [oracle]
  int N = 8;
  int realizations = 50;
  int noise_trajectories = 20;
  double dt_trotter = 0.01;

  // [fit]
  FitKind fit_kind = FitKind::incoherent;
  calibrate::Bounds bounds;
  calibrate::InitGrid init_grid;
  calibrate::FitWindow window;
  std::optional<double> fix_kappa;
  std::optional<double> fix_delta_O;
  bool syk_relations = true;

  // [io]
  std::filesystem::path input;
  std::filesystem::path output;
  std::uint64_t seed = 1;
  bool plot = true;
  int threads = 1;

  /// Throws DomainError on an inconsistent field.
  void validate() const;
};

/// Sets "[section] key" from its text form. Throws DomainError for an
/// unknown key or a malformed value.
void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value);

/// Overlays an INI file on cfg and returns the "section.key" names it set.
/// Unknown sections or keys are errors. Throws ParseError.
std::vector<std::string> load_ini(const std::filesystem::path& path, RunConfig& cfg);
std::vector<std::string> load_ini(std::istream& in, RunConfig& cfg);

/// Full INI rendering; load_ini of the result reproduces cfg.
std::string to_ini(const RunConfig& cfg);

/// "1,2,4"; empty text gives an empty list.
std::vector<int> parse_int_list(const std::string& text);
/// "0.5,1,2", or "a..b" (unit step), or "a..b:h"; ranges include b when
/// it lies on the grid.
std::vector<double> parse_time_list(const std::string& text);

/// Output directory resolved per the precedence above.
std::filesystem::path resolve_output(const RunConfig& cfg, const std::string& command);

}  // namespace echolab::cli
