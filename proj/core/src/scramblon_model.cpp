#include "echolab/scramblon_model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

#include "echolab/errors.hpp"

namespace echolab::scramblon {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

// exp(kappa t) scaled by gamma; stays finite for any realistic t.
double scaled_growth(double gamma, double kappa, double t) {
  return gamma * std::exp(kappa * t);
}

// (1 + x)^(-2 delta) without the cancellation of pow near x = 0.
double power_decay(double x, double delta) {
  return std::exp(-2.0 * delta * std::log1p(x));
}

// 1 - (1 + y)^(-a), accurate for small y.
double one_minus_power(double y, double a) {
  return -std::expm1(-a * std::log1p(y));
}

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

void validate(const ScramblonParams& p) {
  require(std::isfinite(p.kappa) && p.kappa > 0.0, "kappa must be positive");
  require(std::isfinite(p.gamma_I) && p.gamma_I >= 0.0,
          "gamma_I must be nonnegative");
  require(std::isfinite(p.gamma_c) && p.gamma_c >= 0.0,
          "gamma_c must be nonnegative");
  require(std::isfinite(p.delta_O) && p.delta_O > 0.0,
          "delta_O must be positive");
  require(std::isfinite(p.delta_d) && p.delta_d > 0.0,
          "delta_d must be positive");
  require(std::isfinite(p.b) && p.b > 0.0, "b must be positive");
  require(std::isfinite(p.C) && p.C > 0.0, "C must be positive");
}

ScramblonParams ScramblonParams::resolved() const {
  ScramblonParams out = *this;
  if (syk_relations) {
    out.delta_d = 2.0 * delta_O;
    out.b = 1.0;
  }
  validate(out);
  return out;
}

ScramblonParams ScramblonParams::syk(double kappa, double gamma_I,
                                     double gamma_c, double delta_O) {
  ScramblonParams p;
  p.kappa = kappa;
  p.gamma_I = gamma_I;
  p.gamma_c = gamma_c;
  p.delta_O = delta_O;
  p.syk_relations = true;
  return p.resolved();
}

AnsatzFunction::AnsatzFunction(double delta, double b)
    : form_(Form::standard), delta_(delta), b_(b), name_("standard") {
  require(delta > 0.0, "ansatz delta must be positive");
  require(b > 0.0, "ansatz b must be positive");
}

AnsatzFunction::AnsatzFunction(std::function<double(double)> map,
                               std::string name)
    : form_(Form::custom), map_(std::move(map)), name_(std::move(name)) {
  require(static_cast<bool>(map_), "custom ansatz needs a callable");
  const double f0 = map_(0.0);
  require(std::abs(f0 - 1.0) <= 1e-12, "custom ansatz must satisfy f(0) = 1");
}

double AnsatzFunction::operator()(double x) const {
  require(x >= 0.0, "ansatz argument must be nonnegative");
  if (form_ == Form::standard) return f_ansatz(x, delta_, b_);
  return map_(x);
}

double AnsatzFunction::vertex(int m) const {
  if (form_ != Form::standard)
    throw DomainError("vertex coefficients need the standard ansatz");
  // f(x) = (1 + b x)^(-2 delta): the m-th coefficient picks up b^m.
  return vertex_coefficient(m, delta_) * std::pow(b_, m);
}

double f_ansatz(double x, double delta, double b) {
  require(x >= 0.0, "f_ansatz: x must be nonnegative");
  require(delta > 0.0, "f_ansatz: delta must be positive");
  require(b > 0.0, "f_ansatz: b must be positive");
  return power_decay(b * x, delta);
}

double vertex_coefficient(int m, double delta) {
  require(m >= 0, "vertex_coefficient: m must be nonnegative");
  require(delta > 0.0, "vertex_coefficient: delta must be positive");
  double v = 1.0;
  for (int k = 0; k < m; ++k) v *= 2.0 * delta + k;
  return v;
}

double echo_series_incoherent(int n, double t, const ScramblonParams& p,
                              int m_max) {
  validate(p);
  require(n >= 1, "echo_series_incoherent: n must be positive");
  require(t >= 0.0, "echo_series_incoherent: t must be nonnegative");
  require(m_max >= 1, "echo_series_incoherent: m_max must be positive");
  const double x = n * scaled_growth(p.gamma_I, p.kappa, t);
  if (!(x < 1.0))
    throw ConvergenceError("scramblon series diverges: n gamma_I e^{kappa t} = " +
                           std::to_string(x) + " >= 1");
  // term_m = Upsilon^m / m! (-x)^m, built by the ratio of successive terms.
  CompensatedSum sum;
  double term = 1.0;
  sum.add(term);
  for (int m = 1; m <= m_max; ++m) {
    term *= -(2.0 * p.delta_O + (m - 1)) / m * x;
    sum.add(term);
  }
  return sum.value();
}

double echo_incoherent(int n, double t, const ScramblonParams& p) {
  validate(p);
  require(n >= 1, "echo_incoherent: n must be positive");
  require(t >= 0.0, "echo_incoherent: t must be nonnegative");
  return power_decay(n * scaled_growth(p.gamma_I, p.kappa, t), p.delta_O);
}

double renormalized_vertex(double s, const ScramblonParams& p) {
  validate(p);
  require(p.gamma_c > 0.0, "renormalized_vertex: gamma_c must be positive");
  const double x = scaled_growth(p.gamma_c, p.kappa, s);
  if (!std::isfinite(x)) return 0.0;
  return std::exp(-(2.0 * p.delta_d + 1.0) * std::log1p(p.b * x));
}

double coherent_two_round_argument(double t, const ScramblonParams& p) {
  validate(p);
  require(t >= 0.0, "coherent_two_round_argument: t must be nonnegative");
  const double x = scaled_growth(p.gamma_c, p.kappa, t);
  return 2.0 * x + one_minus_power(p.b * x, 2.0 * p.delta_d) / (p.b * p.delta_d);
}

double echo_coherent_two_round(double t, const ScramblonParams& p) {
  return power_decay(coherent_two_round_argument(t, p), p.delta_O);
}

double echo_full_two_round(double t, const ScramblonParams& p) {
  validate(p);
  require(t >= 0.0, "echo_full_two_round: t must be nonnegative");
  const double gamma = p.gamma_I + p.gamma_c;
  if (gamma == 0.0) return 1.0;
  const double y = scaled_growth(gamma, p.kappa, t);
  const double arg = 2.0 * y + (p.gamma_c / (p.b * p.delta_d * gamma)) *
                                   one_minus_power(p.b * y, 2.0 * p.delta_d);
  return power_decay(arg, p.delta_O);
}

double echo_coherent_short_time_limit(int n, double t, const ScramblonParams& p) {
  validate(p);
  require(n >= 1 && t >= 0.0, "coherent limit: need n >= 1 and t >= 0");
  return power_decay(double(n) * n * scaled_growth(p.gamma_c, p.kappa, t),
                     p.delta_O);
}

double echo_coherent_late_time_limit(int n, double t, const ScramblonParams& p) {
  validate(p);
  require(n >= 1 && t >= 0.0, "coherent limit: need n >= 1 and t >= 0");
  return power_decay(n * scaled_growth(p.gamma_c, p.kappa, t), p.delta_O);
}

PerturbativeEcho echo_perturbative(int n, double A, double B) {
  require(n >= 1, "echo_perturbative: n must be positive");
  require(A >= 0.0 && B >= 0.0, "echo_perturbative: A and B must be nonnegative");
  PerturbativeEcho out;
  out.value = 1.0 - 2.0 * n * A - double(n) * n * B;
  out.trusted = out.value >= 0.9;
  return out;
}

double crossover_time(const ScramblonParams& p) {
  validate(p);
  require(p.gamma_c > 0.0, "crossover_time: gamma_c must be positive");
  return std::log(1.0 / p.gamma_c) / p.kappa;
}

double effective_round_exponent(double F_n, double F_1, int n, double delta_O) {
  require(n >= 2, "effective_round_exponent: n must be at least 2");
  require(delta_O > 0.0, "effective_round_exponent: delta_O must be positive");
  require(F_n > 0.0 && F_n < 1.0 && F_1 > 0.0 && F_1 < 1.0,
          "effective_round_exponent: echoes must lie strictly inside (0, 1)");
  const auto invert = [delta_O](double F) {
    return std::expm1(-std::log(F) / (2.0 * delta_O));
  };
  return std::log(invert(F_n) / invert(F_1)) / std::log(double(n));
}

double short_time_coefficient(const ScramblonParams& p) {
  validate(p);
  return 2.0 * p.delta_O * (2.0 * p.delta_d + 1.0) * p.b;
}

EchoTable predict_table(ErrorMode mode, const std::vector<int>& n_list,
                        const std::vector<double>& t_list, const ScramblonParams& p) {
  validate(p);
  EchoTable table;
  for (int n : n_list) {
    require(n >= 1, "predict_table: n must be positive");
    for (double t : t_list) {
      EchoRow row;
      row.source = Source::closed_form;
      row.mode = mode;
      row.n = n;
      row.t = t;
      switch (mode) {
        case ErrorMode::none:
          row.F = 1.0;
          break;
        case ErrorMode::incoherent:
          row.F = echo_incoherent(n, t, p);
          break;
        case ErrorMode::coherent:
          require(n <= 2, "predict_table: coherent closed form needs n <= 2");
          row.F = n == 1 ? power_decay(scaled_growth(p.gamma_c, p.kappa, t), p.delta_O)
                         : echo_coherent_two_round(t, p);
          break;
        case ErrorMode::both:
          require(n == 2, "predict_table: mixed-error closed form needs n = 2");
          row.F = echo_full_two_round(t, p);
          break;
      }
      table.rows.push_back(row);
    }
  }
  char buf[320];
  std::snprintf(buf, sizeof buf, "kappa=%.17g;gamma_I=%.17g;gamma_c=%.17g;delta_O=%.17g;delta_d=%.17g;b=%.17g",
                p.kappa, p.gamma_I, p.gamma_c, p.delta_O, p.delta_d, p.b);
  table.metadata["params"] = buf;
  table.metadata["time_unit"] = p.time_unit;
  return table;
}

}  // namespace echolab::scramblon
