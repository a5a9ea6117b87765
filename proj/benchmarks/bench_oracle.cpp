#include <benchmark/benchmark.h>

#include "echolab/ed_oracle.hpp"

using namespace echolab;
using namespace echolab::oracle;

namespace {

void BM_Hamiltonian(benchmark::State& state) {
  const auto ms = build_majoranas(int(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_hamiltonian(ms, 1.0, seed++).data());
}
BENCHMARK(BM_Hamiltonian)->Arg(8)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_LindbladSuperoperator(benchmark::State& state) {
  const auto ms = build_majoranas(8);
  const auto H = sample_hamiltonian(ms, 1.0, 1);
  const auto jumps = syk_jump_operators(ms, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(lindblad_superoperator(H, jumps, 1).data());
}
BENCHMARK(BM_LindbladSuperoperator)->Unit(benchmark::kMillisecond);

void BM_EchoRounds(benchmark::State& state) {
  const auto ms = build_majoranas(8);
  EdOptions opt;
  opt.realizations = 4;
  opt.noise_trajectories = 4;
  const auto mode = static_cast<ErrorMode>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(echo_rounds_ed({1, 2, 4}, 2.0, ms, 1.0, 0.05, mode, opt));
}
BENCHMARK(BM_EchoRounds)
    ->ArgName("mode")
    ->Arg(int(ErrorMode::incoherent))
    ->Arg(int(ErrorMode::coherent))
    ->Unit(benchmark::kMillisecond);

}  // namespace
