#include "zacgm/bench.hpp"
#include "zacgm/lap.hpp"
#include "zacgm/objective.hpp"
#include "zacgm/problem.hpp"
#include "zacgm/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace zac;

Matrix random_cost(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix C(m, n);
  for (Index e = 0; e < C.size(); ++e) C.data()[e] = u(rng);
  return C;
}

SynthInstance instance(Index n) {
  SynthConfig sc;
  sc.shape = TemplateKind::spiral;
  sc.inlierCount = n / 2;
  sc.outlierCountA = sc.outlierCountB = n - n / 2;
  sc.seed = 7;
  return gen_synthetic(sc);
}

void BM_Lap(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix C = random_cost(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lap(C));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Lap)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_KLap(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix C = random_cost(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_klap(C, n / 2));
  state.SetComplexityN(n);
}
BENCHMARK(BM_KLap)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_BuildProblem(benchmark::State& state) {
  const SynthInstance inst = instance(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_problem(inst.ptsA, inst.ptsB));
}
BENCHMARK(BM_BuildProblem)->Arg(50)->Arg(100)->Arg(200);

void BM_Gradient(benchmark::State& state) {
  const Index n = state.range(0);
  const SynthInstance inst = instance(n);
  const MatchProblem prob = build_problem(inst.ptsA, inst.ptsB);
  const Matrix P = Matrix::Constant(prob.m, prob.n, 0.5 / static_cast<double>(prob.n));
  for (auto _ : state) benchmark::DoNotOptimize(gradient(prob, P));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Gradient)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNCubed);

// items_per_second is Frank-Wolfe iterations per second (all outer rounds for ZACR).
void BM_FrankWolfeIterations(benchmark::State& state) {
  const Index n = state.range(0);
  const SynthInstance inst = instance(n);
  const MatchProblem prob = build_problem(inst.ptsA, inst.ptsB);
  SolverConfig cfg;
  cfg.maxIter = 10;
  cfg.tolRel = 1e-300;
  cfg.tolGap = 1e-300;
  const bool regularized = state.range(1) != 0;
  std::int64_t fwIterations = 0;
  for (auto _ : state) {
    const SolveReport r = regularized ? frank_wolfe_zacr(prob, static_cast<double>(n / 2), cfg)
                                      : frank_wolfe_zac(prob, n / 2, cfg);
    fwIterations += r.iterations;
  }
  state.SetItemsProcessed(fwIterations);
}
BENCHMARK(BM_FrankWolfeIterations)
    ->ArgsProduct({{50, 100, 200}, {0, 1}})
    ->ArgNames({"n", "zacr"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

// The distro's libbenchmark_main.a carries LTO bytecode tied to one compiler build.
BENCHMARK_MAIN();
