#include <benchmark/benchmark.h>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/oracles.hpp"
#include "permuton/sampler.hpp"

namespace {

using namespace permuton;

const DensityField& staircase_field() {
  static const DensityField f = [] {
    const RegionSpec s = staircase_spec(0.5, 0.75, 1.0);
    return build_field(s, solve_simple(s));
  }();
  return f;
}

void BM_GridParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(grid(staircase_field(), static_cast<std::size_t>(st.range(0))));
}
void BM_GridSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(grid_serial(staircase_field(), static_cast<std::size_t>(st.range(0))));
}
BENCHMARK(BM_GridParallel)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSerial)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ChainsParallel(benchmark::State& st) {
  const RegionSpec s = staircase_spec(0.5, 0.75, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(sample_chains(s, 60, 200000, 1, 8));
}
void BM_ChainsSerial(benchmark::State& st) {
  const RegionSpec s = staircase_spec(0.5, 0.75, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(sample_chains_serial(s, 60, 200000, 1, 8));
}
BENCHMARK(BM_ChainsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainsSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
