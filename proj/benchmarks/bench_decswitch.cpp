#include <benchmark/benchmark.h>

#include <decswitch/instances.hpp>
#include <decswitch/oracle.hpp>
#include <decswitch/sim.hpp>
#include <decswitch/solver.hpp>

namespace {

using namespace decswitch;

// Two modes per plant, two-dimensional blocks, horizon set by the argument.
ProblemSpec bench_instance(int horizon) {
  instances::RandomOptions opts;
  for (std::uint64_t seed = 0;; ++seed) {
    opts.max_horizon = horizon;
    ProblemSpec spec = instances::random_instance(seed, opts);
    if (spec.kappa0() == 2 && spec.kappa1() == 2 && spec.horizon() == horizon && spec.dims.d_x0 == 2 &&
        spec.dims.d_x1 == 2) {
      return instances::with_p1(spec, 0.7);
    }
  }
}

void BM_SolveBackward(benchmark::State& state) {
  const ProblemSpec spec = bench_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_backward(spec).j_star);
}
BENCHMARK(BM_SolveBackward)->Arg(1)->Arg(3);

void BM_ExactExpectedCost(benchmark::State& state) {
  const ProblemSpec spec = bench_instance(static_cast<int>(state.range(0)));
  const LinearPolicy policy = LinearPolicy::from_gains(spec, solve_backward(spec).gains);
  for (auto _ : state) benchmark::DoNotOptimize(exact_expected_cost(spec, policy, 1));
}
BENCHMARK(BM_ExactExpectedCost)->Arg(1)->Arg(3);

void BM_MonteCarlo(benchmark::State& state) {
  const ProblemSpec spec = bench_instance(3);
  const SolutionBundle bundle = solve_backward(spec);
  const ClosedLoopController controller(spec, bundle, PolicyKind::optimal);
  const auto runs = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo(controller, runs, 1, 1).mean_cost);
  state.SetItemsProcessed(static_cast<std::int64_t>(runs) * state.iterations());
}
BENCHMARK(BM_MonteCarlo)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
