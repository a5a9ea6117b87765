#pragma once

// Exact simulation of the multi-round echo for small Majorana systems.
//
// F_n(t) = tr[O Phi^n[O]] / tr[O^2] with Phi = exp(L_{-H~} t) exp(L_H t) and
// O = i chi_1 chi_2. Incoherent errors are Lindblad jumps
// L_abcd = sqrt(3V/N^3) chi_a chi_b chi_c chi_d acting in both halves of every
// round. Coherent errors are Brownian couplings added to H in the backward
// half, Trotterized with step dt_T and replayed identically in every round.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "echolab/echo_table.hpp"

namespace echolab::oracle {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMaxModes = 12;

struct MajoranaSet {
  int N = 0;
  int dim = 0;
  /// Self-adjoint chi_a with {chi_a, chi_b} = delta_ab.
  std::vector<Matrix> chi;
};

/// Jordan-Wigner construction. Throws DomainError unless N is even and
/// 2 <= N, SizeError above kMaxModes.
MajoranaSet build_majoranas(int N);

struct Quadruple {
  int a, b, c, d;  ///< 0-based, a < b < c < d.
};

/// All a < b < c < d in lexicographic order.
std::vector<Quadruple> quadruples(int N);

/// chi_a chi_b chi_c chi_d; self-adjoint and squares to identity / 16.
Matrix quartic(const MajoranaSet& ms, const Quadruple& q);

struct CouplingSample {
  std::vector<Quadruple> index;
  /// Gaussian with variance 3! J^2 / N^3, aligned with index.
  std::vector<double> J;
  std::uint64_t seed = 0;
};

CouplingSample sample_couplings(int N, double J, std::uint64_t seed);
Matrix hamiltonian(const MajoranaSet& ms, const CouplingSample& couplings);
/// Throws DomainError for N < 4.
Matrix sample_hamiltonian(const MajoranaSet& ms, double J, std::uint64_t seed);

/// sqrt(3V/N^3) chi_a chi_b chi_c chi_d for every quadruple.
std::vector<Matrix> syk_jump_operators(const MajoranaSet& ms, double V);

/// Column-stacked vectorization, vec(A rho B) = (B^T kron A) vec(rho).
Vector vectorize(const Matrix& rho);
Matrix unvectorize(const Vector& v, int dim);

/// Matrix of rho -> -i[sign H, rho] + sum_k (L rho L^+ - {L^+ L, rho} / 2).
/// Throws DomainError on a dimension mismatch or sign not in {+1, -1} and
/// SizeError when dim^2 exceeds 4096.
Matrix lindblad_superoperator(const Matrix& H, const std::vector<Matrix>& jumps,
                              int sign);

/// Derives the k-th child seed of a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k);

struct EdOptions {
  int realizations = 50;
  /// Noise trajectories per coupling realization in coherent modes.
  int noise_trajectories = 20;
  double dt_trotter = 0.01;
  std::uint64_t seed = 1;
  int threads = 1;
};

void validate(const EdOptions& opt);

struct EchoSample {
  int n = 1;
  double t = 0.0;
  ErrorMode mode = ErrorMode::none;
  double F = 1.0;
  /// Imaginary part of the averaged trace ratio.
  double F_imag = 0.0;
  /// Number of averaged samples (realizations times trajectories).
  int samples = 0;
  double stderr_F = 0.0;
};

/// Echo for every n in n_list from the same random samples, so differences
/// between rounds carry no independent sampling noise. Per-sample results are
/// reduced in a fixed order and do not depend on opt.threads. Throws
/// DivergenceError when |F| > 1 + 1e-6.
std::vector<EchoSample> echo_rounds_ed(const std::vector<int>& n_list, double t,
                                       const MajoranaSet& ms, double J, double V,
                                       ErrorMode mode, const EdOptions& opt);

EchoSample multi_round_echo_ed(int n, double t, const MajoranaSet& ms, double J,
                               double V, ErrorMode mode, const EdOptions& opt);

/// Leading-order single-round loss 1 - F_1 from the OTOC integrals,
///   sum_k int_0^t <[L_k(s), O]^+ [L_k(s), O]> ds / <O^2>
/// for each error channel present in the mode, averaged over the same
/// coupling realizations as echo_rounds_ed.
double perturbative_loss(double t, const MajoranaSet& ms, double J, double V,
                         ErrorMode mode, const EdOptions& opt);

/// t in [0, t_hi] with 1 - F_1(t) = target, by bracketed root finding.
/// Throws DomainError when the loss stays below target up to t_hi.
double time_for_loss(double target, const MajoranaSet& ms, double J, double V,
                     ErrorMode mode, const EdOptions& opt, double t_hi = 20.0);

struct ScalingFit {
  double A = 0.0;
  double B = 0.0;
  std::vector<int> n;
  std::vector<double> loss;   ///< 1 - F_n.
  std::vector<double> ratio;  ///< (1 - F_n) / (1 - F_1).
  std::vector<EchoSample> samples;
};

/// Least-squares fit of 1 - F_n to 2 n A + n^2 B. n_list must contain 1.
/// Throws DomainError when every echo is indistinguishable from 1.
ScalingFit scaling_ratio_test(const MajoranaSet& ms, double J, double V,
                              ErrorMode mode, double t_small,
                              const std::vector<int>& n_list, const EdOptions& opt);

}  // namespace echolab::oracle
