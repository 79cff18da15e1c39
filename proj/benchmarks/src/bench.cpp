#include <benchmark/benchmark.h>

#include <vector>

#include "prefbo/acquisition.hpp"
#include "prefbo/gp.hpp"
#include "prefbo/nsga2.hpp"
#include "prefbo/rng.hpp"
#include "prefbo/scalarize.hpp"
#include "prefbo/testbed.hpp"

namespace {

using namespace prefbo;

std::vector<DesignPoint> random_points(const ProblemSpec& problem, int n,
                                       RngStream& rng) {
  std::vector<DesignPoint> xs(n, DesignPoint(problem.dim));
  for (auto& x : xs) {
    for (int d = 0; d < problem.dim; ++d) {
      const auto [lo, hi] = problem.bounds[d];
      x[d] = lo + (hi - lo) * rng.uniform();
    }
  }
  return xs;
}

void BM_EvaluateHole(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("HOLE-2");
  RngStream rng(7, "bench");
  const auto xs = random_points(problem, 256, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(problem, xs[i++ % xs.size()]));
  }
}
BENCHMARK(BM_EvaluateHole);

void BM_EvaluatePol(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("POL");
  RngStream rng(7, "bench");
  const auto xs = random_points(problem, 256, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(problem, xs[i++ % xs.size()]));
  }
}
BENCHMARK(BM_EvaluatePol);

void BM_GPFit(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("POL");
  RngStream rng(7, "bench");
  const int n = static_cast<int>(state.range(0));
  const auto xs = random_points(problem, n, rng);
  UtilityModel model{UtilityKind::Tchebychev, {0.5, 0.5}, 0.05};
  std::vector<double> us;
  us.reserve(xs.size());
  for (const auto& x : xs) us.push_back(utility(evaluate(problem, x), model));
  for (auto _ : state) {
    benchmark::DoNotOptimize(GPModel::fit(xs, us, problem.bounds));
  }
}
BENCHMARK(BM_GPFit)->Arg(20)->Arg(40);

void BM_GPPosteriorMean(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("POL");
  RngStream rng(7, "bench");
  const auto xs = random_points(problem, 40, rng);
  UtilityModel model{UtilityKind::Tchebychev, {0.5, 0.5}, 0.05};
  std::vector<double> us;
  us.reserve(xs.size());
  for (const auto& x : xs) us.push_back(utility(evaluate(problem, x), model));
  const GPModel gp = GPModel::fit(xs, us, problem.bounds);
  const auto queries = random_points(problem, 256, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp.posterior_mean(queries[i++ % queries.size()]));
  }
}
BENCHMARK(BM_GPPosteriorMean);

void BM_MaximizeEI(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("POL");
  RngStream rng(7, "bench");
  const auto xs = random_points(problem, 40, rng);
  UtilityModel model{UtilityKind::Tchebychev, {0.5, 0.5}, 0.05};
  std::vector<double> us;
  double u_max = -1e300;
  us.reserve(xs.size());
  for (const auto& x : xs) {
    us.push_back(utility(evaluate(problem, x), model));
    u_max = std::max(u_max, us.back());
  }
  const GPModel gp = GPModel::fit(xs, us, problem.bounds);
  for (auto _ : state) {
    RngStream ei_rng(11, "bench-ei", state.iterations());
    benchmark::DoNotOptimize(maximize_ei({gp, u_max, problem.bounds}, ei_rng));
  }
}
BENCHMARK(BM_MaximizeEI)->Unit(benchmark::kMillisecond);

void BM_Nsga2Generations(benchmark::State& state) {
  const ProblemSpec problem = lookup_problem("POL");
  Nsga2Params params;
  params.generations = static_cast<int>(state.range(0));
  const auto evaluator = [&problem](const DesignPoint& x) {
    return evaluate(problem, x);
  };
  for (auto _ : state) {
    RngStream rng(13, "bench-nsga", state.iterations());
    benchmark::DoNotOptimize(
        run_nsga2(evaluator, problem.bounds, params, rng));
  }
}
BENCHMARK(BM_Nsga2Generations)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
