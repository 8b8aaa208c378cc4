#include <doctest.h>

#include "bdsde/forward.hpp"
#include "bdsde/presets.hpp"
#include "test_util.hpp"

#include <cmath>
#include <vector>

using namespace bdsde;

namespace {

struct BudgetGuard {
    std::int64_t saved = forward_storage_budget();
    ~BudgetGuard() { set_forward_storage_budget(saved); }
};

} // namespace

TEST_CASE("zero drift and unit volatility integrate the increments exactly") {
    CoefficientSet c = blank_scalar();
    const TimeGrid grid{0.0, 1.0, 24};
    BrownianBundle b = gen_bundle(7, grid, 16, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.25}, b);
    for (int m = 0; m < 16; ++m) {
        double acc = 0.25;
        for (int i = 0; i <= 24; ++i) {
            CHECK(fwd.x(m, i, 0) == acc);
            if (i < 24) acc += b.dw(m, i, 0);
        }
    }
}

TEST_CASE("ou marginal matches the discrete mean and variance") {
    CoefficientSet c = make_preset("ou-linear");
    const int N = 64, M = 40000;
    const TimeGrid grid{0.0, 1.0, N};
    const double dt = grid.dt();
    BrownianBundle b = gen_bundle(1234, grid, M, 1, 1);
    ForwardSolution fwd = euler_forward(c, {1.0}, b);

    // exact Euler recursion: mean' = (1-dt) mean, var' = (1-dt)^2 var + dt
    double mean_exact = 1.0, var_exact = 0.0;
    for (int i = 0; i < N; ++i) {
        mean_exact *= 1.0 - dt;
        var_exact = (1.0 - dt) * (1.0 - dt) * var_exact + dt;
    }
    const double* xT = fwd.x_col(N);
    double sum = 0.0, sumsq = 0.0;
    for (int m = 0; m < M; ++m) {
        sum += xT[m];
        sumsq += xT[m] * xT[m];
    }
    const double mean = sum / M;
    const double var = sumsq / M - mean * mean;
    const double se = std::sqrt(var_exact / M);
    CHECK(std::fabs(mean - mean_exact) < 4.0 * se);
    CHECK(var == doctest::Approx(var_exact).epsilon(0.05));
    // continuous-time reference: e^{-1} and (1-e^{-2})/2
    CHECK(mean_exact == doctest::Approx(0.36787944117144233).epsilon(0.01));
    CHECK(var_exact == doctest::Approx(0.43233235838169365).epsilon(0.02));
}

TEST_CASE("tangent flow of a linear drift is the deterministic product") {
    CoefficientSet c = make_preset("ou-linear");
    const int N = 50;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(55, grid, 8, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.0}, b);
    tangent_flow(c, fwd, b);
    REQUIRE(fwd.has_flow());
    double prod = 1.0;
    const double dt = grid.dt();
    for (int i = 0; i <= N; ++i) {
        const double* g = fwd.gradx_col(i);
        const double* gi = fwd.gradx_inv_col(i);
        for (int m = 0; m < 8; ++m) {
            CHECK(g[m] == doctest::Approx(prod).epsilon(1e-13));
            CHECK(gi[m] == doctest::Approx(1.0 / prod).epsilon(1e-12));
        }
        prod *= 1.0 - dt;
    }
    for (auto ok : fwd.path_ok()) CHECK(ok == 1);
}

TEST_CASE("inverse flow tracks the forward flow for state-dependent volatility") {
    CoefficientSet c = blank_scalar();
    c.b = [](const double* x, double* out) { out[0] = std::sin(x[0]); };
    c.b_dx = [](const double* x, double* out) { out[0] = std::cos(x[0]); };
    c.sigma = [](const double* x, double* out) { out[0] = 1.0 + 0.1 * std::sin(x[0]); };
    c.sigma_dx = [](const double* x, double* out) { out[0] = 0.1 * std::cos(x[0]); };
    const int N = 100;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(77, grid, 256, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.3}, b);
    tangent_flow(c, fwd, b);
    double worst = 0.0;
    for (int i = 0; i <= N; i += 5) {
        const double* g = fwd.gradx_col(i);
        const double* gi = fwd.gradx_inv_col(i);
        for (int m = 0; m < 256; ++m)
            if (fwd.path_ok()[m]) worst = std::max(worst, std::fabs(g[m] * gi[m] - 1.0));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("malliavin derivative of the state is zero before theta and sigma at theta") {
    CoefficientSet c = make_preset("ou-linear");
    const int N = 40, theta = 16;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(88, grid, 32, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.5}, b);
    tangent_flow(c, fwd, b);
    MalliavinDX dx = malliavin_DX(fwd, theta, c);
    std::vector<double> col(32);
    for (int s = 0; s < theta; ++s) {
        dx.column(fwd, s, col.data());
        for (double v : col) CHECK(v == 0.0);
    }
    dx.column(fwd, theta, col.data());
    for (int m = 0; m < 32; ++m) {
        double sg;
        fwd.sigma_at(fwd.x_col(theta) + m, &sg);
        CHECK(col[m] == doctest::Approx(sg).epsilon(1e-12));
    }
    // linear flow: D_theta X_s = (1-dt)^(s-theta)
    const double dt = grid.dt();
    dx.column(fwd, N, col.data());
    const double expect = std::pow(1.0 - dt, N - theta);
    for (int m = 0; m < 32; ++m) CHECK(col[m] == doctest::Approx(expect).epsilon(1e-11));
}

TEST_CASE("checkpointed storage reproduces the fully stored solution") {
    CoefficientSet c = blank_scalar();
    c.b = [](const double* x, double* out) { out[0] = -0.3 * x[0]; };
    c.b_dx = [](const double*, double* out) { out[0] = -0.3; };
    c.sigma = [](const double* x, double* out) { out[0] = 1.0 + 0.05 * x[0] * x[0] / (1.0 + x[0] * x[0]); };
    c.sigma_dx = [](const double* x, double* out) {
        const double q = 1.0 + x[0] * x[0];
        out[0] = 0.05 * 2.0 * x[0] / (q * q);
    };
    const int N = 64, M = 128;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(99, grid, M, 1, 1);

    ForwardSolution full = euler_forward(c, {0.1}, b);
    tangent_flow(c, full, b);
    REQUIRE(full.checkpoint_stride() == 1);

    BudgetGuard guard;
    set_forward_storage_budget(3 * N * M / 8); // force segmented storage
    ForwardSolution seg = euler_forward(c, {0.1}, b);
    tangent_flow(c, seg, b);
    CHECK(seg.checkpoint_stride() > 1);

    for (int i = 0; i <= N; ++i) {
        const double* xf = full.x_col(i);
        const double* xs = seg.x_col(i);
        const double* gf = full.gradx_col(i);
        const double* gs = seg.gradx_col(i);
        for (int m = 0; m < M; ++m) {
            CHECK(xs[m] == xf[m]);
            CHECK(gs[m] == gf[m]);
        }
    }
    // pair accessors agree across segment boundaries
    for (int i = 0; i < N; ++i) {
        const double *xl, *xr;
        seg.x_pair(i, &xl, &xr);
        const double* want_l = full.x_col(i);
        const double* want_r = full.x_col(i + 1);
        for (int m = 0; m < M; ++m) {
            CHECK(xl[m] == want_l[m]);
            CHECK(xr[m] == want_r[m]);
        }
    }
}

TEST_CASE("flow accessors demand a prior tangent_flow run") {
    CoefficientSet c = blank_scalar();
    const TimeGrid grid{0.0, 1.0, 4};
    BrownianBundle b = gen_bundle(13, grid, 2, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.0}, b);
    CHECK(!fwd.has_flow());
    CHECK_THROWS_AS(fwd.gradx_col(0), std::logic_error);
    CHECK_THROWS_AS(malliavin_DX(fwd, 0, c), std::logic_error);
}

TEST_CASE("divergent paths raise a named error") {
    CoefficientSet c = blank_scalar();
    c.b = [](const double* x, double* out) { out[0] = 1e200 * x[0]; };
    const TimeGrid grid{0.0, 1.0, 8};
    BrownianBundle b = gen_bundle(14, grid, 4, 1, 1);
    bool threw = false;
    try {
        euler_forward(c, {1.0}, b);
    } catch (const std::runtime_error& e) {
        threw = true;
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("x0 may vary per path") {
    CoefficientSet c = blank_scalar();
    const TimeGrid grid{0.0, 1.0, 4};
    BrownianBundle b = gen_bundle(15, grid, 3, 1, 1);
    std::vector<double> x0 = {-1.0, 0.0, 1.0};
    ForwardSolution fwd = euler_forward(c, x0, b);
    for (int m = 0; m < 3; ++m) CHECK(fwd.x(m, 0, 0) == x0[m]);
}
