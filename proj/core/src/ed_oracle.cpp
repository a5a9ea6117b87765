#include "echolab/ed_oracle.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <string>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "echolab/errors.hpp"

namespace echolab::oracle {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Matrix probe_operator(const MajoranaSet& ms) { return I * ms.chi[0] * ms.chi[1]; }

// exp(-i s H) from an eigendecomposition of the Hermitian H.
Matrix unitary(const Matrix& H, double s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Vector phase = (-I * s * eig.eigenvalues().cast<cd>()).array().exp();
  return eig.eigenvectors() * phase.asDiagonal() * eig.eigenvectors().adjoint();
}

template <class M>
struct TaylorScratch {
  M B, B2, B3, P, tmp;
};

// E = exp(-i s H) by scaling and squaring a Taylor polynomial whose degree is
// picked from the norm, evaluated Paterson-Stockmeyer style in B^3; cheaper
// than unitary() when |s H| is small. Reuses the storage of E and w.
template <class M>
void unitary_taylor(const M& H, double s, M& E, TaylorScratch<M>& w) {
  w.B = (-I * s) * H;
  const double norm = w.B.cwiseAbs().colwise().sum().maxCoeff();
  const int squarings = norm > 0.25 ? int(std::ceil(std::log2(norm / 0.25))) : 0;
  w.B /= std::ldexp(1.0, squarings);
  const double b = norm / std::ldexp(1.0, squarings);
  int degree = 2;
  for (double term = b * b / 2; degree < 18 && term * b / (degree + 1) > 1e-17; ++degree)
    term *= b / (degree + 1);
  const int q = degree / 3;  // highest power of B^3
  std::array<double, 21> c{};
  c[0] = 1.0;
  for (int j = 1; j <= 3 * q + 2; ++j) c[j] = c[j - 1] / j;

  w.B2.noalias() = w.B.lazyProduct(w.B);
  w.B3.noalias() = w.B2.lazyProduct(w.B);
  const auto chunk = [&](int i, M& out) {
    out = c[3 * i + 1] * w.B + c[3 * i + 2] * w.B2;
    out.diagonal().array() += c[3 * i];
  };
  chunk(q, E);
  for (int i = q - 1; i >= 0; --i) {
    w.tmp.noalias() = w.B3.lazyProduct(E);
    chunk(i, w.P);
    E = w.tmp + w.P;
  }
  for (int k = 0; k < squarings; ++k) {
    w.tmp.noalias() = E.lazyProduct(E);
    E.swap(w.tmp);
  }
}

// Dissipative part of the Lindbladian for Hermitian or general jumps.
Matrix dissipator(const std::vector<Matrix>& jumps, int dim) {
  const Matrix id = Matrix::Identity(dim, dim);
  Matrix D = Matrix::Zero(Eigen::Index(dim) * dim, Eigen::Index(dim) * dim);
  for (const auto& L : jumps) {
    const Matrix LdL = L.adjoint() * L;
    D += kron(L.conjugate(), L) - 0.5 * kron(id, LdL) - 0.5 * kron(LdL.transpose(), id);
  }
  return D;
}

Matrix commutator_part(const Matrix& H, int sign) {
  const Eigen::Index dim = H.rows();
  const Matrix id = Matrix::Identity(dim, dim);
  return (-I * double(sign)) * (kron(id, H) - kron(H.transpose(), id));
}

// tr[A B] without forming the product.
cd trace_product(const Matrix& A, const Matrix& B) {
  return (A.transpose().array() * B.array()).sum();
}

struct RealizationResult {
  std::vector<cd> sum;      // per n, summed over trajectories
  std::vector<double> sq;   // per n, sum of Re(F)^2
  int count = 0;
};

// Runs job(r) for r = 0..count-1 on up to `threads` workers.
template <class Job>
void parallel_for(int count, int threads, Job job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int r = 0; r < count; ++r) job(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int r = next++; r < count; r = next++) job(r);
    });
}

class Protocol {
 public:
  Protocol(const MajoranaSet& ms, double V, ErrorMode mode)
      : ms_(ms), V_(V), mode_(mode), O_(probe_operator(ms)) {
    norm_ = trace_product(O_, O_).real();
    local_.resize(ms.dim);
    for (Eigen::Index i = 0; i < ms.dim; ++i) {
      local_[i] = Eigen::Index(sectors_[parity(i)].size());
      sectors_[parity(i)].push_back(i);
    }
    if (mode != ErrorMode::none) {
      for (const auto& q : quadruples(ms.N)) {
        gammas_.push_back(quartic(ms, q));
        auto& entries = sparse_gammas_.emplace_back();
        const Matrix& G = gammas_.back();
        for (Eigen::Index c = 0; c < G.cols(); ++c)
          for (Eigen::Index r = 0; r < G.rows(); ++r)
            if (G(r, c) != cd(0.0))
              entries.push_back({parity(r), local_[r], local_[c], G(r, c)});
      }
    }
    for (Eigen::Index c = 0; c < ms.dim; ++c)
      for (Eigen::Index r = 0; r < ms.dim; ++r)
        if (parity(r) == parity(c)) even_ops_.push_back(c * ms.dim + r);
    if (mode == ErrorMode::incoherent || mode == ErrorMode::both) {
      D_ = dissipator(syk_jump_operators(ms, V), ms.dim);
      D_even_ = D_(even_ops_, even_ops_);
    }
  }

  // F_n for n = 1..n_max of one coupling realization and one trajectory.
  std::vector<cd> echoes(const Matrix& H, double t, int n_max, std::uint64_t noise_seed,
                         double dt_T) const {
    std::vector<cd> out(n_max);
    if (t == 0.0) {
      std::fill(out.begin(), out.end(), cd(1.0));
      return out;
    }
    switch (mode_) {
      case ErrorMode::none: {
        const Matrix W = unitary(H, -t) * unitary(H, t);
        unitary_echoes(W, out);
        break;
      }
      case ErrorMode::coherent: {
        if (sectors_[0].size() == 8)
          coherent_echoes<Eigen::Matrix<cd, 8, 8>>(H, t, noise_seed, dt_T, out);
        else
          coherent_echoes<Matrix>(H, t, noise_seed, dt_T, out);
        break;
      }
      case ErrorMode::incoherent: {
        // Restricted to parity-block-diagonal operators, an invariant subspace.
        const auto& idx = even_ops_;
        const Matrix Ef = (t * (D_even_ + commutator_part(H, +1)(idx, idx))).exp();
        const Matrix Eb = (t * (D_even_ + commutator_part(H, -1)(idx, idx))).exp();
        const Matrix Phi = Eb * Ef;
        const Vector o = vectorize(O_.transpose())(idx);
        Vector v = vectorize(O_)(idx);
        for (int k = 0; k < n_max; ++k) {
          v = Phi * v;
          out[k] = (o.array() * v.array()).sum() / norm_;
        }
        break;
      }
      case ErrorMode::both: {
        const Matrix Ef = (t * (D_ + commutator_part(H, +1))).exp();
        std::vector<Matrix> steps;
        backward_steps<Matrix>(H, t, noise_seed, dt_T, [&](const std::array<Matrix, 2>& U) {
          steps.push_back(assemble(U));
        });
        const Matrix P = (D_ * (t / double(steps.size()))).exp();
        Vector v = vectorize(O_);
        for (int k = 0; k < n_max; ++k) {
          v = Ef * v;
          for (const auto& U : steps) {
            const Matrix rho = unvectorize(v, ms_.dim);
            v = P * vectorize(U * rho * U.adjoint());
          }
          out[k] = trace_product(O_, unvectorize(v, ms_.dim)) / norm_;
        }
        break;
      }
    }
    return out;
  }

  // Integrand of the leading-order loss at time s for a diagonalized H.
  double loss_rate(const Eigen::SelfAdjointEigenSolver<Matrix>& eig, double s,
                   const std::vector<Matrix>& gammas_eig, const Matrix& O_eig) const {
    const Vector phase = (I * s * eig.eigenvalues().cast<cd>()).array().exp();
    const Matrix evolve = phase * phase.adjoint();
    double total = 0.0;
    for (const auto& G : gammas_eig) {
      const Matrix Gs = G.cwiseProduct(evolve);
      const Matrix C = Gs * O_eig - O_eig * Gs;
      total += C.squaredNorm();
    }
    return total / norm_;
  }

  const std::vector<Matrix>& gammas() const { return gammas_; }
  const Matrix& probe() const { return O_; }

 private:
  // Trotter steps exp(i (H + dH_s) h) of the backward half, in time order.
  // Calls step(blocks) for each Trotter step exp(i (H + dH_s) h) of the
  // backward half, in time order; blocks[k] acts on parity sector k.
  template <class M, class Step>
  void backward_steps(const Matrix& H, double t, std::uint64_t seed, double dt_T,
                      Step step) const {
    const int S = std::max(1, int(std::ceil(t / dt_T - 1e-9)));
    const double h = t / S;
    const double N3 = double(ms_.N) * ms_.N * ms_.N;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(6.0 * V_ / (N3 * h)));
    std::array<M, 2> H0, Hs, U;
    TaylorScratch<M> scratch;
    for (int k = 0; k < 2; ++k) H0[k] = H(sectors_[k], sectors_[k]);
    for (int s = 0; s < S; ++s) {
      Hs = H0;
      for (const auto& entries : sparse_gammas_) {
        const double x = noise(rng);
        for (const auto& e : entries) Hs[e.sector](e.row, e.col) += x * e.value;
      }
      for (int k = 0; k < 2; ++k) unitary_taylor(Hs[k], -h, U[k], scratch);
      step(U);
    }
  }

  // Unitary echoes with the backward product accumulated per parity sector.
  template <class M>
  void coherent_echoes(const Matrix& H, double t, std::uint64_t seed, double dt_T,
                       std::vector<cd>& out) const {
    std::array<M, 2> Ub;
    for (int k = 0; k < 2; ++k) Ub[k] = M::Identity(sectors_[k].size(), sectors_[k].size());
    M tmp;
    backward_steps<M>(H, t, seed, dt_T, [&](const std::array<M, 2>& U) {
      for (int k = 0; k < 2; ++k) {
        tmp.noalias() = U[k].lazyProduct(Ub[k]);
        Ub[k].swap(tmp);
      }
    });
    unitary_echoes(assemble(Ub) * unitary(H, t), out);
  }

  template <class M>
  Matrix assemble(const std::array<M, 2>& blocks) const {
    Matrix out = Matrix::Zero(ms_.dim, ms_.dim);
    for (int k = 0; k < 2; ++k) out(sectors_[k], sectors_[k]) = blocks[k];
    return out;
  }

  void unitary_echoes(const Matrix& W, std::vector<cd>& out) const {
    Matrix Wn = Matrix::Identity(ms_.dim, ms_.dim);
    for (std::size_t k = 0; k < out.size(); ++k) {
      Wn = W * Wn;
      out[k] = trace_product(O_, Wn * O_ * Wn.adjoint()) / norm_;
    }
  }

  const MajoranaSet& ms_;
  double V_;
  ErrorMode mode_;
  Matrix O_;
  double norm_ = 1.0;
  // Sector-local position of a nonzero of a parity-even operator.
  struct Entry {
    int sector;
    Eigen::Index row, col;
    cd value;
  };

  static int parity(Eigen::Index i) { return std::popcount(std::uint64_t(i)) & 1; }

  // Basis states by fermion parity; H, the noise terms and O preserve it.
  std::array<std::vector<Eigen::Index>, 2> sectors_;
  std::vector<Eigen::Index> local_;
  // Vectorized positions of parity-block-diagonal operator entries.
  std::vector<Eigen::Index> even_ops_;
  std::vector<Matrix> gammas_;
  // Quartic products are signed Pauli strings, one nonzero per row.
  std::vector<std::vector<Entry>> sparse_gammas_;
  Matrix D_;
  Matrix D_even_;
};

bool has_noise(ErrorMode mode) {
  return mode == ErrorMode::coherent || mode == ErrorMode::both;
}

}  // namespace

MajoranaSet build_majoranas(int N) {
  if (N < 2 || N % 2 != 0) throw DomainError("build_majoranas: N must be even and >= 2");
  if (N > kMaxModes)
    throw SizeError("build_majoranas: N = " + std::to_string(N) + " exceeds " +
                    std::to_string(kMaxModes));
  const int sites = N / 2;
  Matrix X(2, 2), Y(2, 2), Z(2, 2), id = Matrix::Identity(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, -I, I, 0;
  Z << 1, 0, 0, -1;

  MajoranaSet ms;
  ms.N = N;
  ms.dim = 1 << sites;
  for (int j = 0; j < sites; ++j) {
    for (const Matrix* P : {&X, &Y}) {
      Matrix op = Matrix::Identity(1, 1);
      for (int k = 0; k < sites; ++k) op = kron(op, k < j ? Z : (k == j ? *P : id));
      ms.chi.push_back(op / std::sqrt(2.0));
    }
  }
  return ms;
}

std::vector<Quadruple> quadruples(int N) {
  std::vector<Quadruple> out;
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b)
      for (int c = b + 1; c < N; ++c)
        for (int d = c + 1; d < N; ++d) out.push_back({a, b, c, d});
  return out;
}

Matrix quartic(const MajoranaSet& ms, const Quadruple& q) {
  return ms.chi.at(q.a) * ms.chi.at(q.b) * ms.chi.at(q.c) * ms.chi.at(q.d);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  std::uint64_t z = master + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CouplingSample sample_couplings(int N, double J, std::uint64_t seed) {
  if (N < 4) throw DomainError("sample_couplings: need N >= 4");
  if (!(J >= 0.0)) throw DomainError("sample_couplings: J must be nonnegative");
  CouplingSample out;
  out.index = quadruples(N);
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(6.0 * J * J / (double(N) * N * N)));
  for (std::size_t k = 0; k < out.index.size(); ++k) out.J.push_back(dist(rng));
  return out;
}

Matrix hamiltonian(const MajoranaSet& ms, const CouplingSample& couplings) {
  if (ms.N < 4) throw DomainError("hamiltonian: need N >= 4");
  Matrix H = Matrix::Zero(ms.dim, ms.dim);
  for (std::size_t k = 0; k < couplings.index.size(); ++k)
    H += couplings.J[k] * quartic(ms, couplings.index[k]);
  return H;
}

Matrix sample_hamiltonian(const MajoranaSet& ms, double J, std::uint64_t seed) {
  return hamiltonian(ms, sample_couplings(ms.N, J, seed));
}

std::vector<Matrix> syk_jump_operators(const MajoranaSet& ms, double V) {
  if (!(V >= 0.0)) throw DomainError("syk_jump_operators: V must be nonnegative");
  const double scale = std::sqrt(3.0 * V / (double(ms.N) * ms.N * ms.N));
  std::vector<Matrix> out;
  for (const auto& q : quadruples(ms.N)) out.push_back(scale * quartic(ms, q));
  return out;
}

Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvectorize(const Vector& v, int dim) {
  if (v.size() != Eigen::Index(dim) * dim)
    throw DomainError("unvectorize: length is not dim^2");
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Matrix lindblad_superoperator(const Matrix& H, const std::vector<Matrix>& jumps,
                              int sign) {
  if (sign != 1 && sign != -1) throw DomainError("lindblad_superoperator: sign must be +-1");
  if (H.rows() != H.cols()) throw DomainError("lindblad_superoperator: H is not square");
  const int dim = int(H.rows());
  if (Eigen::Index(dim) * dim > 4096)
    throw SizeError("lindblad_superoperator: dim^2 exceeds 4096");
  for (const auto& L : jumps)
    if (L.rows() != dim || L.cols() != dim)
      throw DomainError("lindblad_superoperator: jump dimension mismatch");
  return commutator_part(H, sign) + dissipator(jumps, dim);
}

void validate(const EdOptions& opt) {
  if (opt.realizations < 1) throw DomainError("realizations must be positive");
  if (opt.noise_trajectories < 1) throw DomainError("noise_trajectories must be positive");
  if (!(opt.dt_trotter > 0.0)) throw DomainError("dt_trotter must be positive");
}

std::vector<EchoSample> echo_rounds_ed(const std::vector<int>& n_list, double t,
                                       const MajoranaSet& ms, double J, double V,
                                       ErrorMode mode, const EdOptions& opt) {
  validate(opt);
  if (n_list.empty()) throw DomainError("echo_rounds_ed: empty n_list");
  for (int n : n_list)
    if (n < 1) throw DomainError("echo_rounds_ed: n must be positive");
  if (!(t >= 0.0)) throw DomainError("echo_rounds_ed: t must be nonnegative");
  if (!(V >= 0.0)) throw DomainError("echo_rounds_ed: V must be nonnegative");
  const int n_max = *std::max_element(n_list.begin(), n_list.end());

  const Protocol protocol(ms, V, mode);
  const int trajectories = has_noise(mode) ? opt.noise_trajectories : 1;
  std::vector<RealizationResult> results(opt.realizations);

  parallel_for(opt.realizations, opt.threads, [&](int r) {
    const std::uint64_t coupling_seed = derive_seed(opt.seed, std::uint64_t(r));
    const Matrix H = sample_hamiltonian(ms, J, coupling_seed);
    auto& res = results[r];
    res.sum.assign(n_max, cd(0.0));
    res.sq.assign(n_max, 0.0);
    for (int k = 0; k < trajectories; ++k) {
      const auto F = protocol.echoes(H, t, n_max, derive_seed(coupling_seed, k),
                                     opt.dt_trotter);
      for (int m = 0; m < n_max; ++m) {
        res.sum[m] += F[m];
        res.sq[m] += F[m].real() * F[m].real();
      }
      ++res.count;
    }
  });

  std::vector<EchoSample> out;
  for (int n : n_list) {
    cd sum = 0.0;
    double sq = 0.0;
    int count = 0;
    for (const auto& res : results) {
      sum += res.sum[n - 1];
      sq += res.sq[n - 1];
      count += res.count;
    }
    EchoSample s;
    s.n = n;
    s.t = t;
    s.mode = mode;
    s.samples = count;
    s.F = sum.real() / count;
    s.F_imag = sum.imag() / count;
    const double var = count > 1 ? std::max(0.0, (sq - count * s.F * s.F) / (count - 1)) : 0.0;
    s.stderr_F = std::sqrt(var / count);
    if (std::abs(s.F) > 1.0 + 1e-6)
      throw DivergenceError("echo_rounds_ed: nonphysical |F| = " + std::to_string(s.F));
    out.push_back(s);
  }
  return out;
}

EchoSample multi_round_echo_ed(int n, double t, const MajoranaSet& ms, double J,
                               double V, ErrorMode mode, const EdOptions& opt) {
  return echo_rounds_ed({n}, t, ms, J, V, mode, opt).front();
}

double perturbative_loss(double t, const MajoranaSet& ms, double J, double V,
                         ErrorMode mode, const EdOptions& opt) {
  validate(opt);
  if (!(t >= 0.0)) throw DomainError("perturbative_loss: t must be nonnegative");
  const double channels = (mode == ErrorMode::incoherent || mode == ErrorMode::coherent)
                              ? 1.0
                              : (mode == ErrorMode::both ? 2.0 : 0.0);
  if (channels == 0.0 || t == 0.0 || V == 0.0) return 0.0;
  // Each channel carries 3V/N^3: jumps of that rate in both halves, or
  // Brownian noise of twice the rate in the backward half only.
  const double rate = channels * 3.0 * V / (double(ms.N) * ms.N * ms.N);

  const Protocol protocol(ms, V, ErrorMode::coherent);
  std::vector<double> per_realization(opt.realizations);
  parallel_for(opt.realizations, opt.threads, [&](int r) {
    const Matrix H = sample_hamiltonian(ms, J, derive_seed(opt.seed, std::uint64_t(r)));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    const Matrix& U = eig.eigenvectors();
    std::vector<Matrix> gammas;
    for (const auto& G : protocol.gammas()) gammas.push_back(U.adjoint() * G * U);
    const Matrix O = U.adjoint() * protocol.probe() * U;
    const auto f = [&](double s) { return protocol.loss_rate(eig, s, gammas, O); };
    per_realization[r] =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t, 12, 1e-11);
  });
  double sum = 0.0;
  for (double v : per_realization) sum += v;
  return rate * sum / opt.realizations;
}

double time_for_loss(double target, const MajoranaSet& ms, double J, double V,
                     ErrorMode mode, const EdOptions& opt, double t_hi) {
  if (!(target > 0.0 && target < 1.0))
    throw DomainError("time_for_loss: target must lie in (0, 1)");
  if (!(t_hi > 0.0)) throw DomainError("time_for_loss: t_hi must be positive");
  // Root of log(loss / target) in log t; the bracket grows by extrapolation.
  const auto g = [&](double u) {
    const double loss = 1.0 - multi_round_echo_ed(1, std::exp(u), ms, J, V, mode, opt).F;
    return loss > 0.0 ? std::log(loss / target) : -1e3;
  };
  const double u_hi = std::log(t_hi);
  double ua = std::min(0.0, u_hi), ga = g(ua);
  double ub = ua, gb = ga;
  if (ga >= 0.0) {
    while (ga >= 0.0) {
      if (ua < -30.0) throw DomainError("time_for_loss: loss exceeds target as t -> 0");
      ub = ua;
      gb = ga;
      ua -= std::log(2.0);
      ga = g(ua);
    }
  } else {
    double step = std::log(2.0);
    for (;;) {
      if (ua >= u_hi)
        throw DomainError("time_for_loss: loss target not reached by t = " +
                          std::to_string(t_hi));
      ub = std::min(ua + step, u_hi);
      gb = g(ub);
      if (gb >= 0.0) break;
      const double slope = (gb - ga) / (ub - ua);
      ua = ub;
      ga = gb;
      // Aim 5% past the extrapolated root.
      step = slope > 0.0 ? std::clamp(-ga / slope + 0.05, 0.05, std::log(4.0)) : std::log(2.0);
    }
  }
  // Illinois regula falsi; stops once the loss matches target to ~1e-7.
  int side = 0;
  for (int it = 0; it < 100; ++it) {
    if (std::abs(gb) < 1e-7) return std::exp(ub);
    if (std::abs(ga) < 1e-7) return std::exp(ua);
    const double uc = (ua * gb - ub * ga) / (gb - ga);
    const double gc = g(uc);
    if (std::abs(gc) < 1e-7 || ub - ua < 1e-14) return std::exp(uc);
    if (gc > 0.0) {
      ub = uc;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      ua = uc;
      ga = gc;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
  }
  throw NonConvergenceError("time_for_loss: root finding did not converge", {});
}

ScalingFit scaling_ratio_test(const MajoranaSet& ms, double J, double V,
                              ErrorMode mode, double t_small,
                              const std::vector<int>& n_list, const EdOptions& opt) {
  if (std::find(n_list.begin(), n_list.end(), 1) == n_list.end())
    throw DomainError("scaling_ratio_test: n_list must contain 1");
  if (n_list.size() < 2) throw DomainError("scaling_ratio_test: need at least two n");

  ScalingFit fit;
  fit.samples = echo_rounds_ed(n_list, t_small, ms, J, V, mode, opt);
  double loss_1 = 0.0, largest = 0.0;
  for (const auto& s : fit.samples) {
    fit.n.push_back(s.n);
    fit.loss.push_back(1.0 - s.F);
    if (s.n == 1) loss_1 = 1.0 - s.F;
    largest = std::max(largest, std::abs(1.0 - s.F));
  }
  if (largest < 1e-12 || std::abs(loss_1) < 1e-12)
    throw DomainError("scaling_ratio_test: every echo is indistinguishable from 1");
  for (double l : fit.loss) fit.ratio.push_back(l / loss_1);

  Eigen::MatrixXd X(fit.n.size(), 2);
  Eigen::VectorXd y(fit.n.size());
  for (std::size_t k = 0; k < fit.n.size(); ++k) {
    X(Eigen::Index(k), 0) = 2.0 * fit.n[k];
    X(Eigen::Index(k), 1) = double(fit.n[k]) * fit.n[k];
    y(Eigen::Index(k)) = fit.loss[k];
  }
  const Eigen::Vector2d ab = X.colPivHouseholderQr().solve(y);
  fit.A = ab(0);
  fit.B = ab(1);
  return fit;
}

}  // namespace echolab::oracle
