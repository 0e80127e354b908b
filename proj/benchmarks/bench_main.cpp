// Micro-benchmarks for the simulation hot paths. The spectrum computation
// is grid points x quadrature nodes x steady-state solves, so the solve and
// the per-node bookkeeping dominate everything users wait for.

#include <benchmark/benchmark.h>

#include <owi/config.hpp>
#include <owi/liouville.hpp>
#include <owi/quadrature.hpp>
#include <owi/spectrum.hpp>

using namespace owi;

namespace {

SystemParams operating_point() {
    return preset("fig2").sys;
}

DensityMatrix ground_mixture() {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;
    return rho;
}

void bm_build_liouvillian(benchmark::State& state) {
    const SystemParams p = operating_point();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            build_liouvillian(p, EquationMode::TraceConserving));
    }
}
BENCHMARK(bm_build_liouvillian);

void bm_steady_state(benchmark::State& state) {
    const Liouvillian lv =
        build_liouvillian(operating_point(), EquationMode::TraceConserving);
    for (auto _ : state) {
        benchmark::DoNotOptimize(steady_state(lv));
    }
}
BENCHMARK(bm_steady_state);

void bm_rhs_matrix(benchmark::State& state) {
    const Liouvillian lv =
        build_liouvillian(operating_point(), EquationMode::TraceConserving);
    const DensityMatrix rho = ground_mixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rhs(rho, lv));
    }
}
BENCHMARK(bm_rhs_matrix);

void bm_rhs_direct(benchmark::State& state) {
    const SystemParams p = operating_point();
    const DensityMatrix rho = ground_mixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rhs_direct(rho, p, EquationMode::TraceConserving));
    }
}
BENCHMARK(bm_rhs_direct);

void bm_susceptibility(benchmark::State& state) {
    const RunConfig c = preset("fig4_walls");
    const SpectrumParams sp = c.spectrum->to_spectrum_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(susceptibility_at(c.sys, sp, 0.0, 120.0));
    }
}
BENCHMARK(bm_susceptibility);

// One grid point at a fixed 64-node quadrature: the inner unit of a
// spectrum run.
void bm_doppler_average_64(benchmark::State& state) {
    const RunConfig c = preset("fig4_walls");
    const SpectrumParams sp = c.spectrum->to_spectrum_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            doppler_average(c.sys, sp, 0.0, /*node_cap=*/64));
    }
}
BENCHMARK(bm_doppler_average_64);

// Quadrature-rule construction at spectra-relevant sizes. First use pays
// this cost; later uses hit the cache, which is benchmarked separately.
// Each iteration requests a size never seen before so the recurrence and
// root polish actually run; the iteration count is pinned below the window
// of distinct sizes, otherwise the loop would start hitting the cache.
void bm_gauss_hermite_build(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    int bump = n;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gauss_hermite(bump));
        ++bump;
    }
}
BENCHMARK(bm_gauss_hermite_build)->Arg(64)->Iterations(48);
BENCHMARK(bm_gauss_hermite_build)->Arg(256)->Iterations(48);

void bm_gauss_hermite_cached(benchmark::State& state) {
    (void)gauss_hermite(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gauss_hermite(64));
    }
}
BENCHMARK(bm_gauss_hermite_cached);

void bm_evolve_ten_lifetimes(benchmark::State& state) {
    SystemParams p = operating_point();
    p.gamma3 = 1.0;
    p.omega_pr = 0.05;
    p.omega_pu = 60.0;
    p.w12 = 0.5;
    p.r34 = 2.0;
    p.r43 = 2.78;
    const Liouvillian lv = build_liouvillian(p, EquationMode::TraceConserving);
    EvolveControls controls;
    controls.store_every = 1 << 30;
    for (auto _ : state) {
        benchmark::DoNotOptimize(evolve(ground_mixture(), lv, 10.0, controls));
    }
}
BENCHMARK(bm_evolve_ten_lifetimes);

} // namespace

BENCHMARK_MAIN();
