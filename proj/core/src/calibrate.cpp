#include "echolab/calibrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "echolab/errors.hpp"

namespace echolab::calibrate {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DataPoint {
  int n;
  double t;
  double logF;
};

// Residual callback; returns false when theta is outside the model domain.
using ResidualFn = std::function<bool(const VectorXd& theta, VectorXd& r)>;

struct Problem {
  ResidualFn residuals;
  VectorXd lo, hi;
  int m = 0;
};

struct Outcome {
  VectorXd theta;
  double cost = kInf;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

double half_squared(const VectorXd& r) { return 0.5 * r.squaredNorm(); }

VectorXd clamp(const VectorXd& x, const VectorXd& lo, const VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

bool jacobian(const Problem& pb, const VectorXd& theta, double rel_step, MatrixXd& J) {
  const Eigen::Index p = theta.size();
  J.resize(pb.m, p);
  VectorXd rp(pb.m), rm(pb.m);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = rel_step * std::max(std::abs(theta(j)), 1.0);
    VectorXd up = theta, down = theta;
    double span = 2.0 * h;
    if (theta(j) + h > pb.hi(j)) {
      span = h;
      down(j) -= h;
    } else if (theta(j) - h < pb.lo(j)) {
      span = h;
      up(j) += h;
    } else {
      up(j) += h;
      down(j) -= h;
    }
    if (!pb.residuals(up, rp) || !pb.residuals(down, rm)) return false;
    J.col(j) = (rp - rm) / span;
  }
  return true;
}

Outcome levenberg_marquardt(const Problem& pb, VectorXd theta,
                            const OptimizerOptions& opt) {
  Outcome out;
  theta = clamp(theta, pb.lo, pb.hi);
  VectorXd r(pb.m), r_new(pb.m);
  if (!pb.residuals(theta, r)) {
    out.status = "invalid start";
    return out;
  }
  double cost = half_squared(r);
  double lambda = 1e-3;
  MatrixXd J;
  const Eigen::Index p = theta.size();

  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iterations = it;
    if (cost < 1e-30) {
      out.converged = true;
      out.status = "exact";
      break;
    }
    if (!jacobian(pb, theta, opt.fd_step, J)) {
      out.status = "jacobian left the model domain";
      break;
    }
    MatrixXd A = J.transpose() * J;
    VectorXd g = J.transpose() * r;

    // Coordinates held at a bound by the gradient drop out of the step.
    for (Eigen::Index j = 0; j < p; ++j) {
      const bool pinned = (theta(j) <= pb.lo(j) && g(j) > 0.0) ||
                          (theta(j) >= pb.hi(j) && g(j) < 0.0);
      if (!pinned) continue;
      g(j) = 0.0;
      A.row(j).setZero();
      A.col(j).setZero();
    }

    // Scaled gradient test: every free column nearly orthogonal to the residual.
    double cosine = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (A(j, j) > 0.0)
        cosine = std::max(cosine, std::abs(g(j)) / std::sqrt(A(j, j) * 2.0 * cost));
    if (cosine < 1e-12) {
      out.converged = true;
      out.status = "gradient";
      break;
    }

    bool accepted = false;
    VectorXd step;
    double cost_new = kInf;
    while (lambda < 1e20) {
      MatrixXd damped = A;
      for (Eigen::Index j = 0; j < p; ++j)
        damped(j, j) += A(j, j) > 0.0 ? lambda * A(j, j) : 1.0;
      step = damped.ldlt().solve(-g);
      const VectorXd trial = clamp(theta + step, pb.lo, pb.hi);
      step = trial - theta;
      if (pb.residuals(trial, r_new)) {
        cost_new = half_squared(r_new);
        if (cost_new < cost) {
          accepted = true;
          theta = trial;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at any damping: a local minimum.
      out.converged = true;
      out.status = "stationary";
      break;
    }
    const double reduction = (cost - cost_new) / cost;
    cost = cost_new;
    r = r_new;
    lambda = std::max(lambda / 10.0, 1e-12);
    if (reduction < opt.ftol ||
        step.norm() <= opt.xtol * (theta.norm() + opt.xtol)) {
      out.converged = true;
      out.status = "small step";
      break;
    }
  }
  if (!out.converged && out.status.empty()) out.status = "iteration limit";
  out.theta = theta;
  out.cost = cost;
  return out;
}

template <class Job>
void parallel_for(int count, int threads, Job job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) job(k);
    });
}

// Runs every start and keeps the lowest cost, ties going to the lower index.
Outcome multi_start(const Problem& pb, const std::vector<VectorXd>& starts,
                    const OptimizerOptions& opt, int& chosen) {
  std::vector<Outcome> outcomes(starts.size());
  parallel_for(int(starts.size()), opt.threads,
               [&](int k) { outcomes[k] = levenberg_marquardt(pb, starts[k], opt); });
  chosen = -1;
  std::vector<double> costs;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    costs.push_back(outcomes[k].cost);
    if (!outcomes[k].converged || !std::isfinite(outcomes[k].cost)) continue;
    if (chosen < 0 || outcomes[k].cost < outcomes[chosen].cost) chosen = int(k);
  }
  if (chosen < 0)
    throw NonConvergenceError("no optimizer start converged", costs);
  return outcomes[chosen];
}

std::vector<DataPoint> window_rows(const EchoTable& table, ErrorMode mode,
                                   const std::vector<int>& n_set, const FitWindow& w,
                                   int min_points) {
  if (!(w.F_min > 0.0 && w.F_min < w.F_max))
    throw DomainError("fit window must satisfy 0 < F_min < F_max");
  std::vector<DataPoint> out;
  for (int n : n_set) {
    const auto series = table.series(mode, n);
    if (series.empty())
      throw DomainError("table has no " + to_string(mode) + " series for n = " +
                        std::to_string(n));
    int inside = 0;
    for (const auto& row : series) {
      if (row.F < w.F_min || row.F > w.F_max) continue;
      out.push_back({n, row.t, std::log(row.F)});
      ++inside;
    }
    if (inside < min_points)
      throw DomainError("under-determined fit window: " + to_string(mode) + " n = " +
                        std::to_string(n) + " has " + std::to_string(inside) +
                        " points inside [F_min, F_max]");
  }
  return out;
}

// s^2 (J^T J)^+ in theta, then mapped through D = d natural / d theta.
MatrixXd covariance(const Problem& pb, const Outcome& best, const MatrixXd& D,
                    const OptimizerOptions& opt, double& condition) {
  MatrixXd J;
  const Eigen::Index p = best.theta.size();
  if (!jacobian(pb, best.theta, opt.fd_step, J)) {
    condition = kInf;
    return MatrixXd::Constant(D.rows(), D.rows(), kInf);
  }
  const MatrixXd A = J.transpose() * J;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A);
  const double top = eig.eigenvalues().maxCoeff();
  const double bottom = eig.eigenvalues().minCoeff();
  condition = bottom > 0.0 ? top / bottom : kInf;
  const int dof = std::max(1, pb.m - int(p));
  const double s2 = 2.0 * best.cost / dof;
  const MatrixXd inv = A.completeOrthogonalDecomposition().pseudoInverse();
  return D * (s2 * inv) * D.transpose();
}

std::vector<double> log_grid(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) {
    if (!(v > 0.0)) throw DomainError("initial grid values must be positive");
    out.push_back(std::log(v));
  }
  return out;
}

void check(const Interval& i, const char* name) {
  if (!(i.lo > 0.0 && i.lo < i.hi))
    throw DomainError(std::string("bounds for ") + name + " must satisfy 0 < lo < hi");
}

}  // namespace

double FitResult::value(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return estimate(Eigen::Index(k));
  throw DomainError("fit has no parameter '" + name + "'");
}

double FitResult::sigma(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return std::sqrt(covariance(Eigen::Index(k), Eigen::Index(k)));
  throw DomainError("fit has no parameter '" + name + "'");
}

FitResult fit_incoherent_family(const EchoTable& table, const std::vector<int>& n_set,
                                const Bounds& bounds, const InitGrid& grid,
                                const FitWindow& window, const OptimizerOptions& opt) {
  if (n_set.empty()) throw DomainError("fit_incoherent_family: empty n_set");
  check(bounds.gamma, "gamma");
  check(bounds.kappa, "kappa");
  check(bounds.delta_O, "delta_O");
  const auto data = window_rows(table, ErrorMode::incoherent, n_set, window,
                                opt.min_points_per_series);

  Problem pb;
  pb.m = int(data.size());
  pb.lo = VectorXd(3);
  pb.hi = VectorXd(3);
  pb.lo << std::log(bounds.gamma.lo), std::log(bounds.kappa.lo), std::log(bounds.delta_O.lo);
  pb.hi << std::log(bounds.gamma.hi), std::log(bounds.kappa.hi), std::log(bounds.delta_O.hi);
  pb.residuals = [&data](const VectorXd& th, VectorXd& r) {
    const double log_gamma = th(0), kappa = std::exp(th(1)), delta = std::exp(th(2));
    r.resize(Eigen::Index(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double x = data[i].n * std::exp(log_gamma + kappa * data[i].t);
      r(Eigen::Index(i)) = -2.0 * delta * std::log1p(x) - data[i].logF;
    }
    return r.allFinite();
  };

  std::vector<VectorXd> starts;
  for (double k : log_grid(grid.kappa))
    for (double g : log_grid(grid.gamma))
      for (double d : log_grid(grid.delta_O)) starts.push_back(Eigen::Vector3d(g, k, d));
  if (starts.empty()) throw DomainError("fit_incoherent_family: empty initial grid");

  FitResult fit;
  const Outcome best = multi_start(pb, starts, opt, fit.start_index);
  fit.names = {"gamma_I", "kappa", "delta_O"};
  fit.estimate = best.theta.array().exp();
  double condition = 0.0;
  fit.covariance = covariance(pb, best, fit.estimate.asDiagonal(), opt, condition);
  fit.residual_norm = std::sqrt(2.0 * best.cost);
  fit.points = pb.m;
  fit.window = window;
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.starts = int(starts.size());
  fit.status = best.status;
  for (Eigen::Index j = 0; j < 3; ++j)
    if (best.theta(j) <= pb.lo(j) || best.theta(j) >= pb.hi(j))
      fit.warnings.push_back(fit.names[j] + " sits on its bound");
  fit.params.kappa = fit.estimate(1);
  fit.params.gamma_I = fit.estimate(0);
  fit.params.delta_O = fit.estimate(2);
  fit.params.delta_d = 2.0 * fit.estimate(2);
  return fit;
}

FitResult fit_full_two_round(const EchoTable& table, const TwoRoundFitSpec& spec,
                             const Bounds& bounds, const InitGrid& grid,
                             const FitWindow& window, const OptimizerOptions& opt) {
  check(bounds.gamma, "gamma");
  check(bounds.kappa, "kappa");
  check(bounds.delta_O, "delta_O");
  check(bounds.delta_d, "delta_d");
  check(bounds.b, "b");
  const auto data = window_rows(table, spec.mode, {2}, window, opt.min_points_per_series);

  // theta = (log gamma, fraction, [log kappa], [log delta_O], [log delta_d, log b]).
  const bool fit_kappa = !spec.kappa.has_value();
  const bool fit_delta = !spec.delta_O.has_value();
  const bool fit_shape = !spec.syk_relations;
  std::vector<double> lo{std::log(bounds.gamma.lo), 0.0}, hi{std::log(bounds.gamma.hi), 1.0};
  if (fit_kappa) lo.push_back(std::log(bounds.kappa.lo)), hi.push_back(std::log(bounds.kappa.hi));
  if (fit_delta)
    lo.push_back(std::log(bounds.delta_O.lo)), hi.push_back(std::log(bounds.delta_O.hi));
  if (fit_shape) {
    lo.push_back(std::log(bounds.delta_d.lo)), hi.push_back(std::log(bounds.delta_d.hi));
    lo.push_back(std::log(bounds.b.lo)), hi.push_back(std::log(bounds.b.hi));
  }
  const Eigen::Index p = Eigen::Index(lo.size());

  const auto unpack = [&](const VectorXd& th) {
    scramblon::ScramblonParams sp;
    const double gamma = std::exp(th(0));
    sp.gamma_c = th(1) * gamma;
    sp.gamma_I = gamma - sp.gamma_c;
    Eigen::Index k = 2;
    sp.kappa = fit_kappa ? std::exp(th(k++)) : *spec.kappa;
    sp.delta_O = fit_delta ? std::exp(th(k++)) : *spec.delta_O;
    if (fit_shape) {
      sp.delta_d = std::exp(th(k++));
      sp.b = std::exp(th(k++));
    } else {
      sp.delta_d = 2.0 * sp.delta_O;
      sp.b = 1.0;
    }
    return sp;
  };

  Problem pb;
  pb.m = int(data.size());
  pb.lo = Eigen::Map<VectorXd>(lo.data(), p);
  pb.hi = Eigen::Map<VectorXd>(hi.data(), p);
  pb.residuals = [&](const VectorXd& th, VectorXd& r) {
    if (th(1) < 0.0 || th(1) > 1.0) return false;
    const auto sp = unpack(th);
    const double gamma = sp.gamma_I + sp.gamma_c;
    r.resize(Eigen::Index(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double y = gamma * std::exp(sp.kappa * data[i].t);
      const double tail = -std::expm1(-2.0 * sp.delta_d * std::log1p(sp.b * y));
      const double arg = 2.0 * y + sp.gamma_c / (sp.b * sp.delta_d * gamma) * tail;
      r(Eigen::Index(i)) = -2.0 * sp.delta_O * std::log1p(arg) - data[i].logF;
    }
    return r.allFinite();
  };

  std::vector<VectorXd> starts;
  const auto kappas = fit_kappa ? log_grid(grid.kappa) : std::vector<double>{0.0};
  const auto deltas = fit_delta ? log_grid(grid.delta_O) : std::vector<double>{0.0};
  for (double k : kappas)
    for (double g : log_grid(grid.gamma))
      for (double d : deltas)
        for (double f : grid.coherent_fraction) {
          if (!(f >= 0.0 && f <= 1.0))
            throw DomainError("coherent fractions must lie in [0, 1]");
          VectorXd s(p);
          s(0) = g;
          s(1) = f;
          Eigen::Index j = 2;
          if (fit_kappa) s(j++) = k;
          if (fit_delta) s(j++) = d;
          if (fit_shape) {
            s(j++) = std::log(2.0) + (fit_delta ? d : std::log(*spec.delta_O));
            s(j++) = 0.0;
          }
          starts.push_back(s);
        }
  if (starts.empty()) throw DomainError("fit_full_two_round: empty initial grid");

  FitResult fit;
  const Outcome best = multi_start(pb, starts, opt, fit.start_index);
  const auto sp = unpack(best.theta);

  fit.names = {"gamma_I", "gamma_c"};
  std::vector<double> values{sp.gamma_I, sp.gamma_c};
  if (fit_kappa) fit.names.push_back("kappa"), values.push_back(sp.kappa);
  if (fit_delta) fit.names.push_back("delta_O"), values.push_back(sp.delta_O);
  if (fit_shape) {
    fit.names.push_back("delta_d"), values.push_back(sp.delta_d);
    fit.names.push_back("b"), values.push_back(sp.b);
  }
  fit.estimate = Eigen::Map<VectorXd>(values.data(), Eigen::Index(values.size()));

  // d(gamma_I, gamma_c) / d(log gamma, fraction); the rest are exp maps.
  MatrixXd D = MatrixXd::Zero(p, p);
  const double gamma = std::exp(best.theta(0)), f = best.theta(1);
  D(0, 0) = (1.0 - f) * gamma;
  D(0, 1) = -gamma;
  D(1, 0) = f * gamma;
  D(1, 1) = gamma;
  for (Eigen::Index j = 2; j < p; ++j) D(j, j) = fit.estimate(j);
  double condition = 0.0;
  fit.covariance = covariance(pb, best, D, opt, condition);
  fit.residual_norm = std::sqrt(2.0 * best.cost);
  fit.points = pb.m;
  fit.window = window;
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.starts = int(starts.size());
  fit.status = best.status;
  fit.params = sp;

  const double sigma_c = std::sqrt(fit.covariance(1, 1));
  if (!std::isfinite(condition) || condition > 1e12 ||
      (sp.gamma_c > 0.0 && sp.gamma_I > 0.0 &&
       (sigma_c > sp.gamma_c && std::sqrt(fit.covariance(0, 0)) > sp.gamma_I)))
    fit.warnings.push_back(
        "gamma_c and gamma_I are not separately identifiable over the fit window");
  return fit;
}

namespace {

// Linear interpolation of log F at t; empty outside the sampled range.
std::optional<double> interpolate(const std::vector<EchoRow>& series, double t) {
  if (series.empty() || t < series.front().t || t > series.back().t) return std::nullopt;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k].t == t) return series[k].F;
    if (k + 1 < series.size() && series[k].t < t && t < series[k + 1].t) {
      const auto& a = series[k];
      const auto& b = series[k + 1];
      if (!(a.F > 0.0 && b.F > 0.0)) return std::nullopt;
      const double w = (t - a.t) / (b.t - a.t);
      return std::exp((1.0 - w) * std::log(a.F) + w * std::log(b.F));
    }
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

CrossoverReport crossover_analysis(const EchoTable& table, const FitResult& fit,
                                   const CrossoverOptions& opt) {
  CrossoverReport rep;
  auto curve = table.series(ErrorMode::coherent, 2);
  rep.coherent = !curve.empty();
  if (!rep.coherent) curve = table.series(ErrorMode::incoherent, 2);
  auto ref1 = table.series(ErrorMode::incoherent, 1);
  if (ref1.empty()) ref1 = table.series(ErrorMode::coherent, 1);
  if (curve.empty() || ref1.empty())
    throw DomainError("crossover_analysis: need an n = 2 series and an n = 1 series");
  const auto ref2 = table.series(ErrorMode::incoherent, 2);
  const auto ref4 = table.series(ErrorMode::incoherent, 4);
  const double delta_O = fit.params.delta_O;

  bool early_open = true;
  std::optional<double> last_late_miss;
  double last_t = -kInf;
  for (const auto& row : curve) {
    const auto F1 = interpolate(ref1, row.t);
    if (F1 && row.F > 0.0 && row.F < 1.0 && *F1 > 0.0 && *F1 < 1.0) {
      rep.t.push_back(row.t);
      rep.p.push_back(scramblon::effective_round_exponent(row.F, *F1, 2, delta_O));
    }
    if (!rep.coherent) continue;
    if (const auto F4 = interpolate(ref4, row.t)) {
      const double d = std::abs(row.F / *F4 - 1.0);
      if (row.F >= opt.early_floor)
        rep.early_deviation = std::max(rep.early_deviation.value_or(0.0), d);
      if (early_open && d <= opt.tolerance) rep.t_match_early = row.t;
      if (d > opt.tolerance) early_open = false;
    }
    if (const auto F2 = interpolate(ref2, row.t)) {
      const double d = std::abs(row.F / *F2 - 1.0);
      if (row.F <= opt.late_ceiling)
        rep.late_deviation = std::max(rep.late_deviation.value_or(0.0), d);
      if (d > opt.tolerance) last_late_miss = row.t;
      last_t = row.t;
    }
  }
  if (rep.t.empty())
    throw DomainError("crossover_analysis: curves never enter a comparable range");

  if (rep.coherent && std::isfinite(last_t)) {
    // Start of the final stretch of agreement with F_2I.
    for (const auto& row : curve) {
      if (!interpolate(ref2, row.t)) continue;
      if (!last_late_miss || row.t > *last_late_miss) {
        rep.t_match_late = row.t;
        break;
      }
    }
  }

  rep.p_monotone = true;
  for (std::size_t k = 1; k < rep.p.size(); ++k)
    if (rep.p[k] > rep.p[k - 1] + 1e-9) rep.p_monotone = false;
  for (std::size_t k = 1; k < rep.p.size(); ++k) {
    const double a = rep.p[k - 1] - opt.p_level, b = rep.p[k] - opt.p_level;
    if (a >= 0.0 && b < 0.0) {
      rep.t_measured = rep.t[k - 1] + a / (a - b) * (rep.t[k] - rep.t[k - 1]);
      break;
    }
  }
  if (rep.coherent) {
    scramblon::ScramblonParams sp = fit.params;
    if (!(sp.gamma_c > 0.0)) sp.gamma_c = sp.gamma_I;
    if (sp.gamma_c > 0.0) rep.t_predicted = scramblon::crossover_time(sp);
  }
  return rep;
}

std::string format_report(const FitResult& fit) {
  std::ostringstream out;
  out << "status = " << fit.status << '\n';
  out << "converged = " << (fit.converged ? "true" : "false") << '\n';
  out << "points = " << fit.points << '\n';
  out << "residual_norm = " << format_double(fit.residual_norm) << '\n';
  out << "window = [" << format_double(fit.window.F_min) << ", "
      << format_double(fit.window.F_max) << "]\n";
  out << "start_index = " << fit.start_index << '\n';
  out << "starts = " << fit.starts << '\n';
  out << "iterations = " << fit.iterations << '\n';
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    out << fit.names[k] << " = " << format_double(fit.estimate(Eigen::Index(k))) << '\n';
    out << fit.names[k] << ".sigma_approx = " << format_double(fit.sigma(fit.names[k]))
        << '\n';
  }
  for (const auto& w : fit.warnings) out << "warning = " << w << '\n';
  return out.str();
}

std::string format_report(const CrossoverReport& rep) {
  std::ostringstream out;
  const auto opt = [&](const char* key, const std::optional<double>& v) {
    out << key << " = " << (v ? format_double(*v) : std::string("none")) << '\n';
  };
  out << "coherent = " << (rep.coherent ? "true" : "false") << '\n';
  out << "p_monotone = " << (rep.p_monotone ? "true" : "false") << '\n';
  if (!rep.p.empty()) {
    out << "p_first = " << format_double(rep.p.front()) << '\n';
    out << "p_last = " << format_double(rep.p.back()) << '\n';
  }
  opt("t_match_early", rep.t_match_early);
  opt("t_match_late", rep.t_match_late);
  opt("early_deviation", rep.early_deviation);
  opt("late_deviation", rep.late_deviation);
  opt("t_measured", rep.t_measured);
  opt("t_predicted", rep.t_predicted);
  for (std::size_t k = 0; k < rep.t.size(); ++k)
    out << "p(" << format_double(rep.t[k]) << ") = " << format_double(rep.p[k]) << '\n';
  return out.str();
}

}  // namespace echolab::calibrate
