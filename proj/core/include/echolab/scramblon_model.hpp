#pragma once

// Closed-form and series predictions of scramblon theory for the multi-round
// Loschmidt echo F_n(t) under coherent and incoherent errors.
//
// Only the combinations gamma_I, gamma_c and lambda_t = exp(kappa t) / C enter
// the predictions, so the individual vertices and the constant C are never
// stored. The error-ansatz normalization C0 is eliminated by requiring
// fbar'(0) = -Upsilon^1_{dH}.

#include <functional>
#include <string>
#include <vector>

#include "echolab/echo_table.hpp"

namespace echolab::scramblon {

struct ScramblonParams {
  double kappa = 1.0;    ///< Lyapunov exponent, 1/time.
  double gamma_I = 0.0;  ///< Incoherent error strength.
  double gamma_c = 0.0;  ///< Coherent error strength.
  double delta_O = 1.0;  ///< Effective scaling dimension of the probe operator.
  double delta_d = 2.0;  ///< Effective scaling dimension of the error operator.
  double b = 1.0;        ///< Shape constant of the error ansatz.
  double C = 1.0;        ///< Scramblon propagator normalization (metadata).

  /// When set, resolved() replaces delta_d by 2 delta_O and b by 1.
  bool syk_relations = false;

  /// Unit of t; every formula assumes t is expressed in this unit.
  std::string time_unit = "1/J";

  /// Copy with the SYK relations applied (if requested) and all
  /// invariants checked. Throws DomainError.
  ScramblonParams resolved() const;

  /// Parameters with delta_d = 2 delta_O and b = 1.
  static ScramblonParams syk(double kappa, double gamma_I, double gamma_c,
                             double delta_O);
};

/// Throws DomainError unless every field satisfies its invariant.
void validate(const ScramblonParams& p);

/// Monotone map [0, inf) -> (0, 1] used as the auxiliary function f_V.
/// The standard form is (1 + b x)^(-2 delta); a custom form may be supplied
/// as any callable with f(0) = 1 that decreases strictly to zero.
class AnsatzFunction {
 public:
  enum class Form { standard, custom };

  AnsatzFunction(double delta, double b);
  AnsatzFunction(std::function<double(double)> map, std::string name);

  double operator()(double x) const;

  /// Taylor coefficient Upsilon^m in f(x) = sum_m (-x)^m Upsilon^m / m!.
  /// Only available for the standard form.
  double vertex(int m) const;

  Form form() const { return form_; }
  double delta() const { return delta_; }
  double b() const { return b_; }
  const std::string& name() const { return name_; }

 private:
  Form form_;
  double delta_ = 0.0;
  double b_ = 1.0;
  std::function<double(double)> map_;
  std::string name_;
};

/// (1 + b x)^(-2 delta).
double f_ansatz(double x, double delta, double b = 1.0);

/// Rising factorial (2 delta)(2 delta + 1)...(2 delta + m - 1); 1 for m = 0.
double vertex_coefficient(int m, double delta);

/// Truncated scramblon diagram sum for incoherent errors,
///   sum_{m <= m_max} Upsilon^m_O / m! (-n gamma_I e^{kappa t})^m,
/// accumulated with compensated summation. Throws ConvergenceError when
/// n gamma_I e^{kappa t} >= 1.
double echo_series_incoherent(int n, double t, const ScramblonParams& p,
                              int m_max);

/// F_n(t)_I = (1 + n gamma_I e^{kappa t})^(-2 delta_O).
double echo_incoherent(int n, double t, const ScramblonParams& p);

/// Inter-round vertex relative to the intra-round one,
/// (1 + b gamma_c e^{kappa s})^(-2 delta_d - 1). Requires gamma_c > 0.
double renormalized_vertex(double s, const ScramblonParams& p);

/// Argument of f_O in the two-round coherent echo,
///   2x + (1 - (1 + b x)^(-2 delta_d)) / (b delta_d),  x = gamma_c e^{kappa t}.
double coherent_two_round_argument(double t, const ScramblonParams& p);

/// F_2(t)_c with the standard error ansatz.
double echo_coherent_two_round(double t, const ScramblonParams& p);

/// F_2(t) with both error types; gamma = gamma_I + gamma_c.
double echo_full_two_round(double t, const ScramblonParams& p);

/// Short-time limit of the n-round coherent echo, f_O(n^2 gamma_c e^{kappa t}).
/// A limit, not the general-n prediction.
double echo_coherent_short_time_limit(int n, double t, const ScramblonParams& p);

/// Late-time limit of the n-round coherent echo, f_O(n gamma_c e^{kappa t}).
/// A limit, not the general-n prediction.
double echo_coherent_late_time_limit(int n, double t, const ScramblonParams& p);

struct PerturbativeEcho {
  double value = 1.0;
  /// False when value < 0.9, where second-order perturbation theory is
  /// no longer trustworthy.
  bool trusted = true;
};

/// 1 - 2 n A - n^2 B, with A and B the incoherent and coherent OTOC integrals.
PerturbativeEcho echo_perturbative(int n, double A, double B);

/// t* = ln(1 / gamma_c) / kappa. Requires gamma_c > 0.
double crossover_time(const ScramblonParams& p);

/// Inverts x = F^(-1/(2 delta_O)) - 1 for both echoes and returns
/// ln(x_n / x_1) / ln(n): 1 for linear accumulation, 2 for quadratic.
double effective_round_exponent(double F_n, double F_1, int n, double delta_O);

/// Analytic K such that |F_2c - f_O(4x)| <= K x^2 for small x.
double short_time_coefficient(const ScramblonParams& p);

/// Closed-form rows for every (n, t), tagged closed-form. incoherent uses
/// F_n(t)_I for any n; coherent supports n = 1 (f_O(gamma_c e^{kappa t}))
/// and n = 2; both supports n = 2 only; none gives F = 1. Throws DomainError
/// for an unsupported (mode, n).
EchoTable predict_table(ErrorMode mode, const std::vector<int>& n_list,
                        const std::vector<double>& t_list, const ScramblonParams& p);

}  // namespace echolab::scramblon
