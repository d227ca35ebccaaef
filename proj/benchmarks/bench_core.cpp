// Microbenchmarks for the inner loops of the convergence harness and the filter.
#include <benchmark/benchmark.h>

#include "picard/picard.hpp"

using namespace picard;

static void BM_SampleIncrements(benchmark::State& state)
{
    const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
    std::uint64_t replica = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_increments(grid, 1, 7, replica++));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleIncrements)->Arg(64)->Arg(1024);

static void BM_EulerMaruyama(benchmark::State& state)
{
    const auto model = ModelRegistry::builtin().make("ou");
    const auto noise = sample_increments(TimeGrid(1.0, static_cast<std::size_t>(state.range(0))), 1, 7, 0);
    Matrix path;
    for (auto _ : state)
    {
        euler_maruyama_into(model, noise, path);
        benchmark::DoNotOptimize(path.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerMaruyama)->Arg(1024);

static void BM_PicardLogWeight(benchmark::State& state)
{
    const auto model = ModelRegistry::builtin().make("ou");
    const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
    const auto x = euler_maruyama(model, sample_increments(grid, 1, 7, 0));
    const auto y = sample_increments(grid, 1, 8, 0);
    for (auto _ : state)
        benchmark::DoNotOptimize(picard_log_weight(x, y, model.observe));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PicardLogWeight)->Arg(1024);

static void BM_PathCoupler(benchmark::State& state)
{
    const auto model = ModelRegistry::builtin().make("ou");
    const TimeGrid fine(1.0, 1024);
    const auto x = euler_maruyama(model, sample_increments(fine, 1, 7, 0));
    const auto y = sample_increments(fine, 1, 8, 0);
    const std::vector<TestFunction> gs{make_test_function("identity"), make_test_function("indicator")};
    PathCoupler coupler(model, y, {4, 8, 16, 32, 64}, gs);
    for (auto _ : state)
    {
        coupler.add(x);
        if (state.iterations() % 4096 == 0)
            benchmark::DoNotOptimize(coupler.take());
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_PathCoupler);

static void BM_RecursiveUpdate(benchmark::State& state)
{
    const auto model = ModelRegistry::builtin().make("ou");
    const auto particles = static_cast<std::size_t>(state.range(0));
    const TimeGrid grid(1.0, 64);
    const auto ensemble = make_initial_ensemble(model, grid, particles);
    const Matrix noise(particles, 1, 0.01);
    const std::vector<double> dy{0.02};
    for (auto _ : state)
        benchmark::DoNotOptimize(recursive_update(ensemble, model, dy, 1, noise));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RecursiveUpdate)->Arg(1000)->Arg(50000);

BENCHMARK_MAIN();
