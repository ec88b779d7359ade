#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>
#include <vector>

#include "tradediff/diffusion_analysis.hpp"
#include "tradediff/dynamics.hpp"
#include "tradediff/io.hpp"
#include "tradediff/scenario.hpp"
#include "tradediff/static_eq.hpp"

namespace td = tradediff;

namespace {

const td::Economy& toy() {
    static const td::Economy e = [] {
        const std::filesystem::path dir = std::filesystem::path(TRADEDIFF_BENCH_DATA_DIR) / "toy";
        return td::calibrate_from_files(dir, td::load_calibration_config(dir / "calibration.json"));
    }();
    return e;
}

td::PolicyShock full_decouple() {
    return td::load_shock(std::filesystem::path(TRADEDIFF_BENCH_DATA_DIR) / "presets" / "full_decouple.json");
}

void BM_SolveBaseline(benchmark::State& state) {
    const auto& e = toy();
    const auto st = td::StateVector::initial(e);
    const auto pol = td::PolicyInputs::baseline(e);
    for (auto _ : state) benchmark::DoNotOptimize(td::solve_static(e, st, pol));
}
BENCHMARK(BM_SolveBaseline)->Unit(benchmark::kMicrosecond);

// Cold solve of the decoupled world from base-year prices.
void BM_SolveDecoupled(benchmark::State& state) {
    const auto& e = toy();
    const auto st = td::StateVector::initial(e);
    const auto pol = td::apply_shock(e, td::PolicyInputs::baseline(e), full_decouple(), 1);
    td::SolverOptions opts;
    opts.threads = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(td::solve_static(e, st, pol, opts));
}
BENCHMARK(BM_SolveDecoupled)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SimulateHorizon(benchmark::State& state) {
    const auto& e = toy();
    const auto horizon = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(td::simulate(e, {}, horizon));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateHorizon)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_TradeShares(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<double> lambda(n), landed(n);
    for (std::size_t k = 0; k < n; ++k) {
        lambda[k] = u(rng);
        landed[k] = u(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(td::trade_shares(lambda, landed, 4.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TradeShares)->RangeMultiplier(4)->Range(4, 256);

void BM_FigureSurface(benchmark::State& state) {
    td::DiffusionProblem p;
    p.lambda = td::Grid2(2, 2);
    p.lambda(0, 0) = 1.0;
    p.lambda(0, 1) = 0.6;
    p.lambda(1, 0) = 0.8;
    p.lambda(1, 1) = 1.5;
    p.landed_cost = td::Grid2(2, 2, 1.0);
    p.eta = td::Grid2(2, 2, 0.5);
    p.theta = {4.0, 4.0};
    p.beta = 0.4;
    const auto resolution = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(td::figure_surface(p, resolution));
}
BENCHMARK(BM_FigureSurface)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
