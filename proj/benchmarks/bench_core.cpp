#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "sapsim/coefficients.hpp"
#include "sapsim/evolution.hpp"
#include "sapsim/hilbert.hpp"
#include "sapsim/mild_solver.hpp"
#include "sapsim/qwiener.hpp"
#include "sapsim/random.hpp"

namespace sapsim {
namespace {

Model bench_model(std::size_t dim) {
    QSpectrum spec = QSpectrum::geometric(0.5, dim);
    auto family = std::make_shared<DiagonalPeriodicFamily>(
        DiagonalPeriodicFamily::linear_rates(4.0, 1.0, dim), 0.3, 1.0);
    auto drift = std::make_shared<AffineDrift>(
        -1.0, PeriodicForcing{1.0, 1.0, 1.0, HilbertVec::basis(dim, 0)});
    auto diffusion =
        std::make_shared<AffineDiffusion>(DiffusionOperator::identity(dim), 0.5, spec);
    return Model{family, drift, diffusion, spec, HilbertVec::basis(dim, 0)};
}

SimConfig bench_config(std::size_t dim, std::size_t paths) {
    SimConfig cfg;
    cfg.T = 1.0;
    cfg.dt = 0.01;
    cfg.N = dim;
    cfg.P = paths;
    cfg.seed = 7;
    cfg.omega = 1.0;
    return cfg;
}

void BM_Philox(benchmark::State& state) {
    std::array<std::uint32_t, 4> ctr{};
    for (auto _ : state) {
        ++ctr[0];
        benchmark::DoNotOptimize(philox4x32(ctr, {1u, 2u}));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

void BM_NormalFill(benchmark::State& state) {
    std::vector<double> out(static_cast<std::size_t>(state.range(0)));
    std::uint64_t step = 0;
    for (auto _ : state) {
        NormalStream stream({1, 0, step++, StreamPurpose::wiener});
        stream.fill(out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NormalFill)->Arg(8)->Arg(64);

void BM_Step(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const Model m = bench_model(dim);
    const NoiseField noise(m.spectrum, 0.01, 3);
    const WienerIncrement dw = noise.increment(0, 0);
    HilbertVec x = m.c0;
    for (auto _ : state) {
        x = step(*m.family, *m.drift, *m.diffusion, 0.25, 0.01, x, dw);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_Step)->Arg(8)->Arg(64);

void BM_Simulate(benchmark::State& state) {
    const auto threads = static_cast<unsigned>(state.range(0));
    const SimConfig cfg = bench_config(8, 256);
    const Model m = bench_model(8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(cfg, m, {threads}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.P * cfg.steps()));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_GammaApply(benchmark::State& state) {
    const SimConfig cfg = bench_config(8, 128);
    const Model m = bench_model(8);
    const MildSolution sol = simulate(cfg, m);
    const NoiseField noise(m.spectrum, cfg.dt, cfg.seed);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gamma_apply(cfg, m, sol.paths, noise));
    }
}
BENCHMARK(BM_GammaApply)->Unit(benchmark::kMillisecond);

void BM_MomentSeries(benchmark::State& state) {
    const SimConfig cfg = bench_config(8, static_cast<std::size_t>(state.range(0)));
    const MildSolution sol = simulate(cfg, bench_model(8));
    for (auto _ : state) {
        benchmark::DoNotOptimize(moment_series(sol.paths, 4.0));
    }
}
BENCHMARK(BM_MomentSeries)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace sapsim

BENCHMARK_MAIN();
