#include <benchmark/benchmark.h>

#include "echolab/calibrate.hpp"

using namespace echolab;

namespace {

EchoTable synthetic() {
  std::vector<double> t;
  for (int k = 0; k <= 56; ++k) t.push_back(0.25 * k);
  const auto p = scramblon::ScramblonParams::syk(0.866, 5.85e-4, 0.0, 1.37);
  return scramblon::predict_table(ErrorMode::incoherent, {1, 2, 4}, t, p);
}

void BM_FitIncoherentFamily(benchmark::State& state) {
  const auto table = synthetic();
  for (auto _ : state) benchmark::DoNotOptimize(calibrate::fit_incoherent_family(table, {1, 2, 4}));
}
BENCHMARK(BM_FitIncoherentFamily)->Unit(benchmark::kMillisecond);

void BM_FitTwoRound(benchmark::State& state) {
  std::vector<double> t;
  for (int k = 0; k <= 70; ++k) t.push_back(0.2 * k);
  const auto p = scramblon::ScramblonParams::syk(0.866, 3e-4, 3e-4, 1.37);
  const auto table = scramblon::predict_table(ErrorMode::both, {2}, t, p);
  for (auto _ : state) benchmark::DoNotOptimize(calibrate::fit_full_two_round(table));
}
BENCHMARK(BM_FitTwoRound)->Unit(benchmark::kMillisecond);

}  // namespace
