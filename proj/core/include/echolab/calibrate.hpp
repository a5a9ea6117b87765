#pragma once

// Least-squares calibration of the scramblon closed forms against echo data,
// and the quadratic-to-linear crossover diagnostics.
//
// Residuals are log F_model - log F_data over rows inside the fit window.
// Positive parameters are optimized in log space; the coherent fraction of
// the two-round fit is optimized directly on [0, 1].

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "echolab/echo_table.hpp"
#include "echolab/scramblon_model.hpp"

namespace echolab::calibrate {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Bounds {
  Interval gamma{1e-9, 1.0};
  Interval kappa{1e-3, 50.0};
  Interval delta_O{1e-2, 20.0};
  Interval delta_d{1e-2, 40.0};
  Interval b{1e-3, 1e3};
};

struct FitWindow {
  double F_min = 0.02;
  double F_max = 0.98;
};

struct InitGrid {
  std::vector<double> kappa{0.3, 0.6, 0.9, 1.2};
  std::vector<double> gamma{1e-5, 1e-4, 1e-3, 1e-2};
  std::vector<double> delta_O{0.5, 1.0, 1.5, 2.0};
  /// Starting coherent fractions gamma_c / (gamma_I + gamma_c).
  std::vector<double> coherent_fraction{0.1, 0.5, 0.9};
};

struct OptimizerOptions {
  int max_iter = 300;
  /// Relative change of the cost below which a step counts as converged.
  double ftol = 1e-15;
  double xtol = 1e-13;
  /// Central-difference step relative to max(|theta|, 1).
  double fd_step = 1e-6;
  /// Minimum data points per (mode, n) series inside the window.
  int min_points_per_series = 8;
  int threads = 1;
};

struct FitResult {
  /// Parameter names aligned with estimate, e.g. gamma_I, kappa, delta_O.
  std::vector<std::string> names;
  Eigen::VectorXd estimate;
  /// Approximate covariance s^2 (J^T J)^-1 mapped to the natural parameters.
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  ///< Euclidean norm of the log residuals.
  int points = 0;
  FitWindow window;
  bool converged = false;
  int iterations = 0;
  int start_index = -1;
  int starts = 0;
  std::string status;
  std::vector<std::string> warnings;
  /// Estimates packed into a parameter set (unfitted fields at defaults).
  scramblon::ScramblonParams params;

  /// Throws DomainError for an unknown name.
  double value(const std::string& name) const;
  double sigma(const std::string& name) const;
};

/// Joint fit of F_n(t)_I to every n in n_set with shared (gamma_I, kappa,
/// delta_O). Throws DomainError when a series is missing or has fewer than
/// min_points_per_series rows in the window, NonConvergenceError when no
/// start converges.
FitResult fit_incoherent_family(const EchoTable& table, const std::vector<int>& n_set,
                                const Bounds& bounds = {}, const InitGrid& grid = {},
                                const FitWindow& window = {},
                                const OptimizerOptions& opt = {});

struct TwoRoundFitSpec {
  /// Series to fit; n is always 2.
  ErrorMode mode = ErrorMode::both;
  /// Fix delta_d = 2 delta_O and b = 1 instead of fitting them.
  bool syk_relations = true;
  /// Hold kappa or delta_O at a known value.
  std::optional<double> kappa;
  std::optional<double> delta_O;
};

/// Fit of the two-round echo with both error types, separating gamma_c from
/// gamma_I. Adds a warning when the two strengths are not separately
/// identifiable over the window.
FitResult fit_full_two_round(const EchoTable& table, const TwoRoundFitSpec& spec = {},
                             const Bounds& bounds = {}, const InitGrid& grid = {},
                             const FitWindow& window = {},
                             const OptimizerOptions& opt = {});

struct CrossoverOptions {
  /// Largest |F_a / F_b - 1| counted as agreement between two curves.
  double tolerance = 0.03;
  /// Early agreement is only checked while F >= early_floor, late
  /// agreement only once F <= late_ceiling.
  double early_floor = 0.85;
  double late_ceiling = 0.1;
  /// p level marking the measured crossover.
  double p_level = 1.5;
};

struct CrossoverReport {
  bool coherent = false;  ///< False when the table has no coherent n = 2 series.
  std::vector<double> t;
  std::vector<double> p;  ///< Effective round exponent at each t.
  bool p_monotone = false;
  std::optional<double> t_match_early;
  std::optional<double> t_match_late;
  /// Largest |F_2c / F_4I - 1| while F_2c >= early_floor.
  std::optional<double> early_deviation;
  /// Largest |F_2c / F_2I - 1| once F_2c <= late_ceiling.
  std::optional<double> late_deviation;
  std::optional<double> t_measured;   ///< Where p crosses p_level.
  std::optional<double> t_predicted;  ///< ln(1 / gamma_c) / kappa from the fit.
};

/// Compares the coherent n = 2 series with the incoherent n = 1, 2, 4 series.
/// Reference curves are interpolated linearly in log F onto the coherent
/// times. Without a coherent series, the incoherent n = 2 series takes its
/// place and only p(t) is reported. gamma_c falls back to gamma_I when the
/// fit has no coherent strength. Throws DomainError when the curves never
/// share a comparable range.
CrossoverReport crossover_analysis(const EchoTable& table, const FitResult& fit,
                                   const CrossoverOptions& opt = {});

/// Flat "key = value" text, one entry per line.
std::string format_report(const FitResult& fit);
std::string format_report(const CrossoverReport& report);

}  // namespace echolab::calibrate
