#include "echolab/syk_saddle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "echolab/errors.hpp"

namespace echolab::saddle {

namespace {

constexpr double kDivergenceBound = 10.0;

// Y = G0 X in O(N^2): G0(a, b) = sgn(rank a - rank b) / 2 and node order is
// rank order, so each column is a running difference of partial sums.
void apply_free_propagator(const ContourGrid& grid, const Eigen::MatrixXd& X,
                           Eigen::MatrixXd& Y) {
  const Eigen::Index N = X.rows();
  Y.resize(N, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double total = X.col(j).sum();
    double below = 0.0;
    Eigen::Index a = 0;
    while (a < N) {
      // Nodes sharing a rank are adjacent; at most two (a junction).
      Eigen::Index end = a + 1;
      while (end < N && grid.rank(end) == grid.rank(a)) ++end;
      double group = 0.0;
      for (Eigen::Index k = a; k < end; ++k) group += X(k, j);
      const double above = total - below - group;
      for (Eigen::Index k = a; k < end; ++k) Y(k, j) = 0.5 * (below - above);
      below += group;
      a = end;
    }
  }
}

}  // namespace

std::size_t ContourGrid::node(int position, int local) const {
  if (position < 1 || position > 4 * n_ || local < 0 || local > M_)
    throw DomainError("contour node index out of range");
  const bool ket = position <= 2 * n_;
  return node_at(position, ket ? local : M_ - local);
}

int ContourGrid::local_of(std::size_t g) const {
  const int traversal = int(g % (M_ + 1));
  return position_of(g) <= 2 * n_ ? traversal : M_ - traversal;
}

double ContourGrid::physical_time(std::size_t g) const {
  const int i = local_of(g);
  const bool forward = branch(position_of(g)).direction == Direction::forward;
  return (forward ? i : M_ - i) * dt();
}

std::vector<std::pair<int, int>> ContourGrid::superoperator_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int p = 1; p <= 2 * n_; ++p) out.emplace_back(p, 4 * n_ + 1 - p);
  return out;
}

std::vector<int> ContourGrid::backward_positions() const {
  std::vector<int> out;
  for (const auto& b : branches_)
    if (b.direction == Direction::backward) out.push_back(b.position);
  return out;
}

ContourGrid build_contour(int n, double t_max, int M, std::size_t max_nodes) {
  if (n < 1) throw DomainError("build_contour: n must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw DomainError("build_contour: t_max must be positive");
  if (M < 8) throw DomainError("build_contour: need at least 8 intervals per branch");
  const std::size_t nodes = std::size_t(4) * n * (M + 1);
  if (nodes > max_nodes)
    throw SizeError("build_contour: " + std::to_string(nodes) +
                    " nodes exceed the cap of " + std::to_string(max_nodes));

  ContourGrid grid;
  grid.n_ = n;
  grid.t_max_ = t_max;
  grid.M_ = M;
  for (int p = 1; p <= 4 * n; ++p) {
    BranchMeta b;
    b.position = p;
    b.side = p <= 2 * n ? Side::ket : Side::bra;
    // Ket: F1 B1 F2 B2 ... ; bra: the same segments in reverse.
    const int segment = b.side == Side::ket ? p : 4 * n + 1 - p;
    b.direction = segment % 2 == 1 ? Direction::forward : Direction::backward;
    b.round = (segment + 1) / 2;
    b.time_sign = p % 2 == 1 ? 1 : -1;
    b.action_factor = b.time_sign;
    grid.branches_.push_back(b);
  }
  grid.weights_.resize(Eigen::Index(nodes));
  for (std::size_t g = 0; g < nodes; ++g) {
    const int k = int(g % (M + 1));
    grid.weights_(Eigen::Index(g)) = grid.local_weight(k);
  }
  return grid;
}

void validate(const SykParams& p) {
  if (!(p.J >= 0.0) || !std::isfinite(p.J)) throw DomainError("J must be nonnegative");
  if (!(p.V >= 0.0) || !std::isfinite(p.V)) throw DomainError("V must be nonnegative");
}

void validate(const SolverOptions& opt) {
  if (!(opt.mixing > 0.0 && opt.mixing <= 1.0))
    throw DomainError("mixing must lie in (0, 1]");
  if (!(opt.tol > 0.0)) throw DomainError("tol must be positive");
  if (opt.max_iter < 1) throw DomainError("max_iter must be positive");
  if (!(opt.dt_target > 0.0)) throw DomainError("dt_target must be positive");
}

Eigen::MatrixXd free_propagator(const ContourGrid& grid) {
  const auto N = Eigen::Index(grid.size());
  Eigen::MatrixXd G0(N, N);
  for (Eigen::Index b = 0; b < N; ++b) {
    const long rb = grid.rank(b);
    for (Eigen::Index a = 0; a < N; ++a) {
      const long ra = grid.rank(a);
      G0(a, b) = ra > rb ? 0.5 : (ra < rb ? -0.5 : 0.0);
    }
  }
  return G0;
}

Eigen::MatrixXd self_energy(const Eigen::MatrixXd& G, const ContourGrid& grid,
                            const SykParams& p) {
  validate(p);
  const auto N = Eigen::Index(grid.size());
  if (G.rows() != N || G.cols() != N)
    throw DomainError("self_energy: propagator does not match the grid");

  Eigen::VectorXd zeta(N);
  for (Eigen::Index g = 0; g < N; ++g)
    zeta(g) = grid.branch(grid.position_of(g)).action_factor;

  Eigen::MatrixXd sigma = G.array().cube().matrix();
  sigma.array() *= (p.melonic_constant * p.J * p.J) * (zeta * zeta.transpose()).array();

  const int M = grid.intervals();
  const auto add_local = [&](int pa, int pb, double coefficient) {
    for (int i = 0; i <= M; ++i) {
      const auto a = Eigen::Index(grid.node(pa, i));
      const auto b = Eigen::Index(grid.node(pb, i));
      const double g = G(a, b);
      sigma(a, b) += coefficient * g * g * g / grid.local_weight(i);
    }
  };

  switch (p.error_mode) {
    case ErrorMode::none:
      break;
    case ErrorMode::incoherent:
    case ErrorMode::coherent:
    case ErrorMode::both:
      if (p.error_mode != ErrorMode::coherent) {
        // Jumps pair the ket and bra copies of each superoperator.
        for (const auto& [u, v] : grid.superoperator_pairs()) {
          add_local(u, v, p.incoherent_constant * p.V);
          add_local(v, u, p.incoherent_constant * p.V);
        }
      }
      if (p.error_mode != ErrorMode::incoherent) {
        // One noise trajectory is shared by every backward segment.
        const auto backward = grid.backward_positions();
        for (int a : backward)
          for (int b : backward) {
            if (a == b) continue;
            const double za = grid.branch(a).action_factor;
            const double zb = grid.branch(b).action_factor;
            add_local(a, b, p.coherent_constant * p.V * za * zb);
          }
      }
      break;
    default:
      throw DomainError("self_energy: unknown error mode");
  }
  return sigma;
}

SaddleSolution solve_saddle(const ContourGrid& grid, const SykParams& p,
                            const SolverOptions& opt) {
  validate(p);
  validate(opt);
  const auto N = Eigen::Index(grid.size());
  const Eigen::MatrixXd G0 = free_propagator(grid);
  const Eigen::VectorXd& w = grid.weights();

  SaddleSolution out;
  out.G = G0;
  Eigen::MatrixXd weighted(N, N), A(N, N), G_new(N, N);

  for (int it = 1; it <= opt.max_iter; ++it) {
    weighted = self_energy(out.G, grid, p);
    weighted.array() *= (w * w.transpose()).array();

    // A = I - G0 W Sigma W, then solve A G_new = G0 in place.
    apply_free_propagator(grid, weighted, A);
    A = -A;
    A.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(A);
    G_new = lu.solve(G0);
    G_new = 0.5 * (G_new - G_new.transpose()).eval();

    const double residual = (G_new - out.G).cwiseAbs().maxCoeff();
    out.G = (1.0 - opt.mixing) * out.G + opt.mixing * G_new;
    out.iterations = it;
    out.residual = residual;
    out.trace.push_back(residual);
    if (opt.log) *opt.log << it << ' ' << residual << '\n';

    if (!std::isfinite(residual) || out.G.cwiseAbs().maxCoeff() > kDivergenceBound)
      throw DivergenceError("saddle iteration diverged at iteration " +
                            std::to_string(it));
    if (residual < opt.tol) return out;
  }
  throw NonConvergenceError("saddle iteration did not reach tol after " +
                                std::to_string(opt.max_iter) + " iterations",
                            out.trace);
}

double echo_from_propagator(const Eigen::MatrixXd& G, const ContourGrid& grid) {
  const double g = G(Eigen::Index(grid.turn_node()), Eigen::Index(grid.start_node()));
  return 4.0 * g * g;
}

SweepResult sweep_echo(const std::vector<int>& n_list,
                       const std::vector<double>& t_list, const SykParams& p,
                       const SolverOptions& opt, int threads) {
  validate(p);
  validate(opt);
  for (double t : t_list)
    if (!(t > 0.0)) throw DomainError("sweep_echo: every t must be positive");

  SweepResult result;
  for (int n : n_list)
    for (double t : t_list) {
      SweepPoint point;
      point.n = n;
      point.t = t;
      point.intervals = std::max(8, int(std::ceil(t / opt.dt_target - 1e-9)));
      result.points.push_back(point);
    }

  SolverOptions quiet = opt;
  quiet.log = nullptr;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < result.points.size(); k = next++) {
      auto& point = result.points[k];
      try {
        const auto grid = build_contour(point.n, point.t, point.intervals, opt.max_nodes);
        const auto sol = solve_saddle(grid, p, quiet);
        point.F = echo_from_propagator(sol.G, grid);
        point.iterations = sol.iterations;
        point.residual = sol.residual;
        point.trace = sol.trace;
        point.ok = true;
      } catch (const NonConvergenceError& e) {
        point.trace = e.trace();
        point.message = e.what();
      } catch (const std::exception& e) {
        point.message = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, int(result.points.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
  }

  auto& table = result.table;
  for (const auto& point : result.points) {
    if (!point.ok) continue;
    EchoRow row;
    row.source = Source::saddle;
    row.mode = p.error_mode;
    row.n = point.n;
    row.t = point.t;
    row.F = point.F;
    table.rows.push_back(row);
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const EchoRow& a, const EchoRow& b) {
                     return a.n != b.n ? a.n < b.n : a.t < b.t;
                   });
  std::ostringstream settings;
  settings << "dt_target=" << opt.dt_target << ";tol=" << opt.tol
           << ";mixing=" << opt.mixing << ";max_iter=" << opt.max_iter;
  table.metadata["J"] = std::to_string(p.J);
  table.metadata["V"] = std::to_string(p.V);
  table.metadata["solver"] = settings.str();
  return result;
}

}  // namespace echolab::saddle
