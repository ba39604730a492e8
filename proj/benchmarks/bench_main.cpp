#include "odc/cqr_solver.hpp"
#include "odc/detectors.hpp"
#include "odc/kernel_km.hpp"
#include "odc/simulator.hpp"

#include <benchmark/benchmark.h>

namespace {

odc::Dataset simulated(std::size_t n_clean)
{
    odc::SimConfig cfg;
    cfg.n_clean = n_clean;
    return odc::scale_covariates(odc::generate_dataset(cfg, 0).data);
}

void BM_LocalCdfAtCensored(benchmark::State& state)
{
    auto d = simulated(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(odc::local_cdf_at_censored(d, {0.05}));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LocalCdfAtCensored)->Arg(250)->Arg(480)->Arg(1000)->Arg(2000)->Complexity();

void BM_SolveWeightedQR(benchmark::State& state)
{
    auto d = simulated(static_cast<std::size_t>(state.range(0)));
    auto cdf = odc::local_cdf_at_censored(d, {0.05});
    auto prob = odc::assemble_problem(d, 0.5, odc::redistribution_weights(d, 0.5, cdf));
    for (auto _ : state)
        benchmark::DoNotOptimize(odc::solve_weighted_qr(prob));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveWeightedQR)->Arg(250)->Arg(480)->Arg(1000)->Arg(2000)->Complexity();

void BM_FitThreeLevels(benchmark::State& state)
{
    auto d = simulated(480);
    for (auto _ : state) {
        auto cdf = odc::local_cdf_at_censored(d, {0.05});
        for (double tau : {0.25, 0.5, 0.75})
            benchmark::DoNotOptimize(odc::fit_cqr(d, tau, cdf));
    }
}
BENCHMARK(BM_FitThreeLevels);

void BM_StudyReplicates(benchmark::State& state)
{
    odc::SimConfig cfg;
    cfg.replicates = static_cast<std::size_t>(state.range(0));
    cfg.threads = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(odc::run_study(cfg));
}
BENCHMARK(BM_StudyReplicates)->Arg(10)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
