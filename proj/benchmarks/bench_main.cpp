#include <benchmark/benchmark.h>

#include "pmltm/quadrature.hpp"
#include "pmltm/simulation.hpp"
#include "pmltm/text.hpp"
#include "pmltm/vem.hpp"

using namespace pmltm;

namespace {

struct Fixture {
    BinaryMatrix data;
    vem::FitConfig config;
    vem::Initialization init;
};

Fixture makeFixture(std::size_t n, int G, int D) {
    Fixture f{simulation::generateDataset(simulation::SimulationSpec::table1(n, 3)).data, {}, {}};
    f.config.hyper.components = G;
    f.config.hyper.dimensions = D;
    f.init = vem::initialize(vem::DenseBinary(f.data), f.config, 5);
    return f;
}

void BM_LatentMoments(benchmark::State& state) {
    const auto f = makeFixture(static_cast<std::size_t>(state.range(0)), 2, static_cast<int>(state.range(1)));
    const vem::DenseBinary dense(f.data);
    for (auto _ : state) benchmark::DoNotOptimize(vem::veStepLatentMoments(dense, f.init.params, f.init.state));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LatentMoments)->Args({500, 1})->Args({500, 2})->Args({5000, 2});

void BM_SlopeUpdate(benchmark::State& state) {
    const auto f = makeFixture(static_cast<std::size_t>(state.range(0)), 2, static_cast<int>(state.range(1)));
    const vem::DenseBinary dense(f.data);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            vem::mStepWeightsIntercepts(dense, f.init.state, f.init.params, f.init.params.lambda, {1e-4, true}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SlopeUpdate)->Args({500, 1})->Args({500, 2})->Args({5000, 2});

void BM_Bound(benchmark::State& state) {
    const auto f = makeFixture(static_cast<std::size_t>(state.range(0)), 2, 1);
    const vem::DenseBinary dense(f.data);
    for (auto _ : state) benchmark::DoNotOptimize(vem::evaluateBound(dense, f.init.params, f.init.state, {1.0, 0.5, true}));
}
BENCHMARK(BM_Bound)->Arg(500)->Arg(5000);

void BM_Fit(benchmark::State& state) {
    const auto f = makeFixture(500, 2, 1);
    auto config = f.config;
    config.hyper.restarts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(vem::fit(f.data, config));
}
BENCHMARK(BM_Fit)->Unit(benchmark::kMillisecond);

void BM_QuadratureLogLik(benchmark::State& state) {
    const int D = static_cast<int>(state.range(0));
    const auto f = makeFixture(500, 2, D);
    const quadrature::QuadratureRule rule(21, D);
    for (auto _ : state) benchmark::DoNotOptimize(quadrature::ghLogLikelihood(f.data, f.init.params, rule));
}
BENCHMARK(BM_QuadratureLogLik)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Preprocess(benchmark::State& state) {
    const std::string review =
        "The location is perfect, steps from the subway. Our host was incredibly friendly and helpful! "
        "Sheets were stained; cleaning was clearly rushed. We stayed 4 nights.";
    for (auto _ : state) benchmark::DoNotOptimize(text::preprocess(review));
    state.SetBytesProcessed(state.iterations() * static_cast<long>(review.size()));
}
BENCHMARK(BM_Preprocess);

}  // namespace
BENCHMARK_MAIN();
