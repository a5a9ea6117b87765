#include <benchmark/benchmark.h>

#include "echolab/scramblon_model.hpp"

using namespace echolab::scramblon;

namespace {

const ScramblonParams kParams = ScramblonParams::syk(0.866, 3e-4, 3e-4, 1.37);

void BM_EchoIncoherent(benchmark::State& state) {
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo_incoherent(2, t, kParams));
    t = t < 14.0 ? t + 1e-3 : 0.0;
  }
}
BENCHMARK(BM_EchoIncoherent);

void BM_EchoFullTwoRound(benchmark::State& state) {
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo_full_two_round(t, kParams));
    t = t < 14.0 ? t + 1e-3 : 0.0;
  }
}
BENCHMARK(BM_EchoFullTwoRound);

void BM_SeriesIncoherent(benchmark::State& state) {
  ScramblonParams p;
  p.gamma_I = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(echo_series_incoherent(1, 0.0, p, int(state.range(0))));
}
BENCHMARK(BM_SeriesIncoherent)->Arg(20)->Arg(80);

}  // namespace
