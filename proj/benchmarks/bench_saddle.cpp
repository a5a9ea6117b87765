#include <benchmark/benchmark.h>

#include "echolab/syk_saddle.hpp"

using namespace echolab;
using namespace echolab::saddle;

namespace {

void BM_SelfEnergy(benchmark::State& state) {
  const auto grid = build_contour(2, 4.0, int(state.range(0)));
  const Eigen::MatrixXd G = free_propagator(grid);
  SykParams p;
  p.V = 0.01;
  p.error_mode = ErrorMode::both;
  for (auto _ : state) benchmark::DoNotOptimize(self_energy(G, grid, p));
  state.counters["nodes"] = double(grid.size());
}
BENCHMARK(BM_SelfEnergy)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

// Full solve; the per-iteration cost is dominated by one dense LU.
void BM_SolveSaddle(benchmark::State& state) {
  const auto grid = build_contour(int(state.range(0)), 2.0, int(state.range(1)));
  SykParams p;
  p.V = 0.01;
  p.error_mode = ErrorMode::incoherent;
  int iterations = 0;
  for (auto _ : state) {
    const auto sol = solve_saddle(grid, p);
    iterations = sol.iterations;
    benchmark::DoNotOptimize(sol.G.data());
  }
  state.counters["nodes"] = double(grid.size());
  state.counters["iterations"] = iterations;
}
BENCHMARK(BM_SolveSaddle)->Args({1, 40})->Args({2, 40})->Args({2, 80})->Unit(benchmark::kMillisecond);

}  // namespace
