#include <benchmark/benchmark.h>

#include "bdc/monomial.hpp"
#include "bdc/problems/cp.hpp"
#include "bdc/problems/sdl.hpp"
#include "bdc/relu.hpp"
#include "bdc/solver.hpp"

namespace {

using namespace bdc;

void BM_Polarize(benchmark::State& state) {
  const Monomial m({1, 1, 2, static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(polarize(m));
}
BENCHMARK(BM_Polarize)->Arg(2)->Arg(4)->Arg(8);

void BM_ForwardSplit(benchmark::State& state) {
  Engine eng = make_engine(0, "bench");
  const Index w = state.range(0);
  const MlpParams p = random_mlp({8, w, w, 3}, eng, 0.1);
  const Matrix X = Matrix::Random(8, 128);
  for (auto _ : state) benchmark::DoNotOptimize(forward_split(p, X).A);
}
BENCHMARK(BM_ForwardSplit)->Arg(16)->Arg(64);

void BM_SdlBlockStep(benchmark::State& state) {
  const SdlData d = sdl_synthetic(10, 32, 100, 5, 0);
  const auto p = sdl_problem({d.Y, 32, 0.1, 5, SdlVariant::kL1MinusLq});
  const BlockVector theta = sdl_initial_point(*p, 0);
  const auto block = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(prox_bdca_step(*p, theta, block, 1e-3, 10, 1e-8).x);
}
BENCHMARK(BM_SdlBlockStep)->Arg(SdlProblem::kDictBlock)->Arg(SdlProblem::kCodeBlock);

void BM_CpSweep(benchmark::State& state) {
  const auto [T, truth] = cp_random_exact({4, 5, 6}, 2, 1);
  const auto p = cp_problem(T, 2);
  const BlockVector theta0 = cp_initial_point(*p, 1);
  for (auto _ : state) {
    BlockVector theta = theta0;
    for (std::size_t i = 0; i < 3; ++i) theta = replace_block(theta, i, bdca_step(*p, theta, i, 1, 1e-12).x);
    benchmark::DoNotOptimize(theta.data());
  }
}
BENCHMARK(BM_CpSweep);

}  // namespace

BENCHMARK_MAIN();
