#include <benchmark/benchmark.h>

#include "riskmdp/game.hpp"
#include "riskmdp/generators.hpp"
#include "riskmdp/grid.hpp"
#include "riskmdp/spectral.hpp"

using namespace riskmdp;

namespace {

MdpModel bench_model(std::size_t states) {
  RandomModelSpec spec;
  spec.states = states;
  spec.actions = 2;
  return random_model(spec, 42);
}

void BM_GrowthRate(benchmark::State& state) {
  const MdpModel m = bench_model(static_cast<std::size_t>(state.range(0)));
  const StationaryPolicy y = StationaryPolicy::uniform(m.num_states(), m.num_actions());
  for (auto _ : state) benchmark::DoNotOptimize(growth_rate(m, y).lambda_max);
}
BENCHMARK(BM_GrowthRate)->Arg(4)->Arg(16)->Arg(64);

void BM_BruteForce(benchmark::State& state) {
  const MdpModel m = bench_model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_lambda_star(m).value);
}
BENCHMARK(BM_BruteForce)->Arg(4)->Arg(8);

void BM_LpSolve(benchmark::State& state) {
  const MdpModel m = bench_model(3);
  const lp::LinearProgram dual = build_dual(m, GridSpec(m, static_cast<unsigned>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(lp::solve(dual).objective);
  state.counters["columns"] = static_cast<double>(dual.num_variables());
}
BENCHMARK(BM_LpSolve)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_SolveGame(benchmark::State& state) {
  const MdpModel m = bench_model(4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_game(m, static_cast<unsigned>(state.range(0))).objective);
}
BENCHMARK(BM_SolveGame)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Congen(benchmark::State& state) {
  const MdpModel m = bench_model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_congen(m, {}).objective);
}
BENCHMARK(BM_Congen)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
