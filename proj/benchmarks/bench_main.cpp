#include "bdsde/bdsde_solver.hpp"
#include "bdsde/forward.hpp"
#include "bdsde/presets.hpp"
#include "bdsde/spde.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace bdsde;

void bm_bundle_dw(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    const BrownianBundle bundle = gen_bundle(42, TimeGrid(0.0, 1.0, 64), M, 1, 1);
    std::vector<double> col(static_cast<std::size_t>(M));
    int i = 0;
    for (auto _ : state) {
        bundle.dw_column(i % 64, col.data());
        benchmark::DoNotOptimize(col.data());
        ++i;
    }
    state.SetItemsProcessed(state.iterations() * M);
}
BENCHMARK(bm_bundle_dw)->Arg(1 << 12)->Arg(1 << 16);

void bm_euler_forward(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    const CoefficientSet coeffs = make_preset("ou-linear");
    const BrownianBundle bundle = gen_bundle(42, TimeGrid(0.0, 1.0, 64), M, 1, 1);
    for (auto _ : state) {
        ForwardSolution fwd = euler_forward(coeffs, {0.5}, bundle);
        benchmark::DoNotOptimize(fwd.x_col(64));
    }
    state.SetItemsProcessed(state.iterations() * M * 64);
}
BENCHMARK(bm_euler_forward)->Arg(1 << 12)->Arg(1 << 15);

void bm_regression_fit(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    const CoefficientSet coeffs = make_preset("heat-quadratic");
    const BrownianBundle bundle = gen_bundle(42, TimeGrid(0.0, 1.0, 8), M, 1, 1);
    const ForwardSolution fwd = euler_forward(coeffs, {0.0}, bundle);
    std::vector<double> target(static_cast<std::size_t>(M));
    const double* x = fwd.x_col(8);
    for (int m = 0; m < M; ++m) target[m] = x[m] * x[m];
    RegressionSpec spec;
    for (auto _ : state) {
        RegressionField f = fit_regression(spec, 1, 1, M, x, target.data());
        benchmark::DoNotOptimize(f.coef.data());
    }
    state.SetItemsProcessed(state.iterations() * M);
}
BENCHMARK(bm_regression_fit)->Arg(1 << 14)->Arg(1 << 17);

void bm_backward_sweep(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    const CoefficientSet coeffs = make_preset("random-coeff-sine");
    const TimeGrid grid(0.0, 1.0, 32);
    const BrownianBundle bundle = gen_bundle(42, grid, M, 1, 1);
    const BackwardBFunctional bback = backward_B(bundle, coeffs.phi);
    const ForwardSolution fwd = euler_forward(coeffs, {0.0}, bundle);
    RegressionSpec reg;
    for (auto _ : state) {
        BDSDESolution sol = solve_bdsde(coeffs, fwd, bundle, bback, reg);
        benchmark::DoNotOptimize(sol.y0());
    }
    state.SetItemsProcessed(state.iterations() * M * 32);
}
BENCHMARK(bm_backward_sweep)->Arg(1 << 12)->Arg(1 << 14);

void bm_spde_step(benchmark::State& state) {
    const int J = static_cast<int>(state.range(0));
    const CoefficientSet coeffs = make_preset("heat-quadratic");
    const int N = 64;
    const TimeGrid grid(0.0, 1.0, N);
    const BrownianBundle bundle = gen_bundle(42, grid, 1, 1, 1);
    const BackwardBFunctional bback = backward_B(bundle, coeffs.phi);
    SpaceGrid space{-6.0, 6.0, J};
    for (auto _ : state) {
        RandomFieldU field = solve_spde(coeffs, bundle, bback, space, SpdeScheme::theta_implicit);
        benchmark::DoNotOptimize(field.u.data());
    }
    state.SetItemsProcessed(state.iterations() * N * J);
}
BENCHMARK(bm_spde_step)->Arg(200)->Arg(800);

} // namespace

BENCHMARK_MAIN();
