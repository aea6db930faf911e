#include <benchmark/benchmark.h>

#include <cmath>

#include <weylworlds/dynamics.hpp>
#include <weylworlds/ensemble.hpp>
#include <weylworlds/oracle.hpp>

using namespace weylworlds;

namespace {

ScalarField normal(const Grid& grid) {
    return ScalarField::sample(grid, [](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::exp(-0.5 * r2);
    });
}

void BM_LaplaceBeltrami(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int order = static_cast<int>(state.range(1));
    const Grid grid = Grid::cube(3, -4, 4, n);
    const ScalarField f = normal(grid);
    const Metric g({1.0, 2.0, 0.5});
    for (auto _ : state) benchmark::DoNotOptimize(laplace_beltrami(f, g, order));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * grid.size()));
}
BENCHMARK(BM_LaplaceBeltrami)->Args({64, 2})->Args({64, 6})->Unit(benchmark::kMillisecond);

void BM_QuantumPotential(benchmark::State& state) {
    const Grid grid = Grid::cube(3, -4, 4, static_cast<std::size_t>(state.range(0)));
    const ScalarField mu = normal(grid);
    for (auto _ : state) benchmark::DoNotOptimize(quantum_potential(mu, Metric::identity(3), 1.0, kDefaultNodeFloor, 4));
}
BENCHMARK(BM_QuantumPotential)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_KdeEstimate(benchmark::State& state) {
    const Grid grid({Axis{-8.0, 8.0, 1601}});
    const WorldEnsemble e = sample_from_density(normal(grid), static_cast<std::size_t>(state.range(0)), 1);
    const auto h = silverman_bandwidth(e);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_density_kde(e, grid, h, Metric({1.0})));
}
BENCHMARK(BM_KdeEstimate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SpacingEstimate(benchmark::State& state) {
    const Grid grid({Axis{-8.0, 8.0, 1601}});
    const WorldEnsemble e = quantile_ensemble_1d(normal(grid), static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(estimate_density_spacing_1d(e, grid, Metric({1.0})));
}
BENCHMARK(BM_SpacingEstimate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SelfContainedStep(benchmark::State& state) {
    const Grid grid({Axis{-8.0, 8.0, 801}});
    const Metric g({1.0});
    IntegratorConfig cfg;
    cfg.estimator = DensityMethod::spacing1d;
    cfg.order = 4;
    cfg.dt = 1e-4;
    cfg.stability_check = false;
    WorldEnsemble e = quantile_ensemble_1d(normal(grid), static_cast<std::size_t>(state.range(0)));
    SelfContainedIntegrator integ(grid, g, harmonic_potential(g, 1.0, 1.0), cfg);
    for (auto _ : state) benchmark::DoNotOptimize(integ.step(e));
}
BENCHMARK(BM_SelfContainedStep)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SplitStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto dim = static_cast<std::size_t>(state.range(1));
    const Grid grid = Grid::cube(dim, -10, 10, n, true);
    AnalyticState s;
    s.dim = dim;
    SplitStepPropagator prop(analytic_state(s, grid, 0.0), analytic_potential(s, grid), 0.01);
    for (auto _ : state) prop.step();
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * grid.size()));
}
BENCHMARK(BM_SplitStep)->Args({4096, 1})->Args({256, 2})->Args({64, 3})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
