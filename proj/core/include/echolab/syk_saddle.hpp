#pragma once

// Large-N Schwinger-Dyson solver for the SYK model on the 4n-branch
// time-reversal contour of the n-round Loschmidt echo.
//
// Layout. Branch positions p = 1..4n follow the contour. The ket copy of the
// protocol comes first (forward, backward, forward, ... for rounds 1..n), then
// the bra copy in reverse order, so branch p and branch 4n+1-p are the ket and
// bra copies of the same Lindblad superoperator. Physical time increases along
// odd branches and decreases along even ones; the contour therefore zigzags
// 0 -> t -> 0 and returns to physical time 0 at the turning point between
// branches 2n and 2n+1, where the measured operator sits.
//
// Conventions. G(a, b) is the contour-ordered <chi(a) chi(b)> of one Majorana
// flavor with {chi, chi} = 1, so the free propagator is sgn_C(a, b) / 2. The
// Dyson equation is discretized with positive trapezoid weights W,
//   G = G0 + G0 (W Sigma W) G,
// where Sigma already carries the branch action factors zeta = +-1 (the sign of
// dz / dt on the branch). Every quantity is real at infinite temperature.

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "echolab/echo_table.hpp"

namespace echolab::saddle {

enum class Side { ket, bra };
enum class Direction { forward, backward };

struct BranchMeta {
  int position = 1;  ///< Contour order, 1-based.
  Side side = Side::ket;
  /// forward: evolution under L_H; backward: under L_{-H~}.
  Direction direction = Direction::forward;
  int round = 1;
  /// +1 when physical time grows along the contour on this branch.
  int time_sign = 1;
  /// zeta entering the melonic and Brownian self-energies.
  double action_factor = 1.0;
};

/// Default cap on 4n(M+1); a dense propagator of this size takes ~290 MB.
inline constexpr std::size_t kDefaultNodeCap = 6000;

class ContourGrid {
 public:
  int n_rounds() const { return n_; }
  double t_max() const { return t_max_; }
  /// Intervals per branch; each branch carries M + 1 nodes.
  int intervals() const { return M_; }
  double dt() const { return t_max_ / M_; }
  std::size_t size() const { return std::size_t(4) * n_ * (M_ + 1); }

  const std::vector<BranchMeta>& branches() const { return branches_; }
  const BranchMeta& branch(int position) const { return branches_.at(position - 1); }

  /// Global node at local (protocol) time index i on a branch. Local time is
  /// measured from the start of the superoperator segment, so the ket and bra
  /// copies of a segment share it.
  std::size_t node(int position, int local) const;
  int position_of(std::size_t g) const { return int(g / (M_ + 1)) + 1; }
  int local_of(std::size_t g) const;
  double local_time(std::size_t g) const { return local_of(g) * dt(); }
  double physical_time(std::size_t g) const;
  /// Contour rank; the duplicated nodes at branch junctions share a rank.
  long rank(std::size_t g) const {
    return long(position_of(g) - 1) * M_ + long(g % (M_ + 1));
  }

  /// Positive trapezoid weight of every node (dt, halved at branch ends).
  const Eigen::VectorXd& weights() const { return weights_; }
  double local_weight(int local) const {
    return (local == 0 || local == M_) ? 0.5 * dt() : dt();
  }

  /// (p, 4n+1-p) for p = 1..2n.
  std::vector<std::pair<int, int>> superoperator_pairs() const;
  /// Positions of the branches evolving under L_{-H~}.
  std::vector<int> backward_positions() const;

  std::size_t start_node() const { return 0; }
  std::size_t end_node() const { return size() - 1; }
  /// Last node of branch 2n, where the measured operator is inserted.
  std::size_t turn_node() const { return node_at(2 * n_, M_); }

 private:
  friend ContourGrid build_contour(int, double, int, std::size_t);
  std::size_t node_at(int position, int traversal) const {
    return std::size_t(position - 1) * (M_ + 1) + traversal;
  }

  int n_ = 1;
  double t_max_ = 1.0;
  int M_ = 8;
  std::vector<BranchMeta> branches_;
  Eigen::VectorXd weights_;
};

/// Throws DomainError for n < 1, t_max <= 0 or M < 8 and SizeError when
/// 4n(M+1) exceeds max_nodes.
ContourGrid build_contour(int n, double t_max, int M,
                          std::size_t max_nodes = kDefaultNodeCap);

struct SykParams {
  double J = 1.0;
  double V = 0.0;
  ErrorMode error_mode = ErrorMode::none;
  /// Sigma_J = melonic_constant J^2 zeta_a zeta_b G^3.
  double melonic_constant = -1.0;
  /// Sigma(u_i, v_i) += incoherent_constant V G^3 / w_i on ket/bra pairs.
  double incoherent_constant = 0.5;
  /// Sigma(a_i, b_i) += coherent_constant V zeta_a zeta_b G^3 / w_i on pairs
  /// of distinct backward branches.
  double coherent_constant = -1.0;
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 500;
  double mixing = 0.5;
  /// Spacing used when the sweep derives M from t.
  double dt_target = 0.025;
  std::size_t max_nodes = kDefaultNodeCap;
  /// When set, receives one "index residual" line per iteration.
  std::ostream* log = nullptr;
};

void validate(const SykParams& p);
void validate(const SolverOptions& opt);

/// sgn_C(a, b) / 2, zero between nodes of equal contour rank.
Eigen::MatrixXd free_propagator(const ContourGrid& grid);

/// Self-energy in the convention described at the top of this header.
Eigen::MatrixXd self_energy(const Eigen::MatrixXd& G, const ContourGrid& grid,
                            const SykParams& p);

struct SaddleSolution {
  Eigen::MatrixXd G;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> trace;
};

/// Damped fixed-point iteration of the discretized Dyson equation starting
/// from the free propagator. Throws NonConvergenceError (with the residual
/// trace) or DivergenceError when some |G| exceeds 10.
SaddleSolution solve_saddle(const ContourGrid& grid, const SykParams& p,
                            const SolverOptions& opt = {});

/// F = [2 G(turn, start)]^2 for O = i chi_1 chi_2, factorized at large N.
double echo_from_propagator(const Eigen::MatrixXd& G, const ContourGrid& grid);

struct SweepPoint {
  int n = 1;
  double t = 0.0;
  int intervals = 0;
  bool ok = false;
  double F = 0.0;
  int iterations = 0;
  double residual = 0.0;
  /// Residual after each Dyson iteration, also kept for failed solves.
  std::vector<double> trace;
  std::string message;
};

struct SweepResult {
  /// Rows of the successful points only, ordered by (n, t).
  EchoTable table;
  /// One entry per requested point, failures included.
  std::vector<SweepPoint> points;
};

/// One independent contour solve per (n, t), with M = ceil(t / dt_target).
/// Failures are recorded per point and never abort the sweep. Points run on
/// up to `threads` worker threads; results do not depend on the count.
SweepResult sweep_echo(const std::vector<int>& n_list,
                       const std::vector<double>& t_list, const SykParams& p,
                       const SolverOptions& opt, int threads = 1);

}  // namespace echolab::saddle
