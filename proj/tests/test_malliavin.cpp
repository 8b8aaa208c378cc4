#include <doctest.h>

#include "bdsde/malliavin.hpp"
#include "bdsde/presets.hpp"
#include "test_util.hpp"

#include <cmath>
#include <vector>

using namespace bdsde;

namespace {

BackwardBFunctional make_bb(const CoefficientSet& c, const BrownianBundle& b) {
    return backward_B(b, [&c](double t, double* out) { c.phi(t, out); });
}

// built in place so base.forward stays valid
struct LinearCase {
    CoefficientSet c;
    BrownianBundle b;
    ForwardSolution fwd;
    BackwardBFunctional bb;
    BDSDESolution base;
    RegressionSpec reg;

    void init(int N, int M, std::uint64_t sw, std::uint64_t sb, double x0) {
        c = make_preset("ou-linear");
        const TimeGrid grid{0.0, 1.0, N};
        b = gen_bundle(sw, sb, grid, M, 1, 1);
        fwd = euler_forward(c, {x0}, b);
        tangent_flow(c, fwd, b);
        bb = make_bb(c, b);
        reg.degree = 2;
        reg.ridge = 0.0;
        base = solve_bdsde(c, fwd, b, bb, reg);
    }
};

} // namespace

TEST_CASE("variational solution of the linear problem is the flow product") {
    const int N = 80, M = 256;
    LinearCase lc;
    lc.init(N, M, 501, 502, 0.5);
    VariationalSolution var = solve_variational(lc.c, lc.fwd, lc.b, lc.bb, lc.base, lc.reg);
    CHECK(var.theta == -1);
    CHECK(var.kd() == 1);
    const double dt = 1.0 / N;
    const double want = std::pow(1.0 - dt, N);
    CHECK(var.back.y0[0] == doctest::Approx(want).epsilon(1e-11));
    std::vector<double> col(M);
    var.grady_col(N, col.data());
    const double* g = lc.fwd.gradx_col(N);
    for (int m = 0; m < M; ++m) CHECK(col[m] == doctest::Approx(g[m]).epsilon(1e-11));
}

TEST_CASE("finite differences confirm the variational gradient") {
    CoefficientSet c = make_preset("ou-linear");
    const int N = 60, M = 512;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(511, 512, grid, M, 1, 1);
    const BackwardBFunctional bb = make_bb(c, b);
    RegressionSpec reg;
    reg.degree = 2;
    reg.ridge = 0.0;
    GradientCheckReport rep = fd_gradient_check(c, b, bb, {0.5}, 1e-4, reg);
    REQUIRE(rep.grad_y0.size() == 1);
    const double want = std::pow(1.0 - 1.0 / N, N);
    CHECK(rep.grad_y0[0] == doctest::Approx(want).epsilon(1e-10));
    CHECK(rep.max_abs_err_central < 1e-8);
    CHECK(rep.max_abs_err_forward < 1e-6);
}

TEST_CASE("gradient identity holds on the quadratic problem") {
    CoefficientSet c = make_preset("heat-quadratic");
    const int N = 64, M = 20000;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(521, 522, grid, M, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.0}, b);
    tangent_flow(c, fwd, b);
    const BackwardBFunctional bb = make_bb(c, b);
    RegressionSpec reg;
    BDSDESolution base = solve_bdsde(c, fwd, b, bb, reg);
    base.forward = &fwd;
    VariationalSolution var = solve_variational(c, fwd, b, bb, base, reg);
    IdentityReport rep = identity_checks(var, fwd, base);
    CHECK(rep.has_eq_product);
    CHECK(rep.has_z0);
    CHECK(rep.skipped_paths == 0);
    CHECK(rep.rms_eq_product < 0.05);
    CHECK(rep.rms_z0 < 0.05);
}

TEST_CASE("malliavin layer is zero before theta and matches the product after") {
    // the diagonal residual carries the one-node offset of the Z estimator,
    // about  Z * dt, so dt has to be small for the 1e-2 identity budget
    const int N = 128, M = 80000;
    LinearCase lc;
    lc.init(N, M, 531, 532, 0.5);
    const int theta = N / 2;
    VariationalSolution dlayer = solve_malliavin_D(lc.c, lc.fwd, lc.b, lc.bb, lc.base, theta, lc.reg);
    CHECK(dlayer.theta == theta);
    std::vector<double> col(M);
    for (int i = 0; i < theta; ++i) {
        dlayer.grady_col(i, col.data());
        int nonzero = 0;
        for (double v : col) nonzero += v != 0.0;
        CHECK(nonzero == 0);
    }
    // linear problem: D_theta Y_s = (1-dt)^(N-theta) exactly
    dlayer.grady_col(theta, col.data());
    const double want = std::pow(1.0 - 1.0 / N, N - theta);
    for (int m = 0; m < 64; ++m) CHECK(col[m] == doctest::Approx(want).epsilon(1e-10));

    IdentityReport rep = identity_checks(dlayer, lc.fwd, lc.base);
    CHECK(rep.has_diag);
    CHECK(!rep.has_eq_product);
    CHECK(rep.rms_diag < 1e-2);
}

TEST_CASE("malliavin norm of a constant solution is the constant") {
    CoefficientSet c = blank_scalar();
    c.h = [](const double*, double* out) { out[0] = 5.0; };
    const int N = 12, M = 64;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(541, 542, grid, M, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.0}, b);
    const BackwardBFunctional bb = make_bb(c, b);
    RegressionSpec reg;
    reg.ridge = 0.0;
    BDSDESolution sol = solve_bdsde(c, fwd, b, bb, reg);
    sol.forward = &fwd;
    const double norm2 = malliavin_norm(sol, {});
    CHECK(norm2 == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("malliavin norm adds the weighted derivative energy") {
    const int N = 40, M = 4000;
    LinearCase lc;
    lc.init(N, M, 551, 552, 0.5);
    const int s = N / 2;
    VariationalSolution l0 = solve_malliavin_D(lc.c, lc.fwd, lc.b, lc.bb, lc.base, 0, lc.reg);
    VariationalSolution l1 = solve_malliavin_D(lc.c, lc.fwd, lc.b, lc.bb, lc.base, N / 4, lc.reg);
    const double bare = malliavin_norm(lc.base, {}, s);
    const double with_layers = malliavin_norm(lc.base, {&l0, &l1}, s);
    CHECK(bare > 0.0);
    CHECK(with_layers > bare);

    // hand quadrature from the stored columns
    const TimeGrid& grid = lc.b.grid;
    std::vector<double> col(M);
    auto mean_sq = [&](const VariationalSolution& v, int node) {
        v.grady_col(node, col.data());
        double acc = 0.0;
        for (double q : col) acc += q * q;
        return acc / M;
    };
    lc.base.y_col(s, col.data());
    double want = 0.0;
    for (double q : col) want += q * q;
    want /= M;
    want += (grid.node(N / 4) - grid.node(0)) * mean_sq(l0, s);
    want += (grid.node(s) - grid.node(N / 4)) * mean_sq(l1, s);
    CHECK(with_layers == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("layer solves demand the tangent flow and the matching forward") {
    CoefficientSet c = make_preset("ou-linear");
    const int N = 10, M = 32;
    const TimeGrid grid{0.0, 1.0, N};
    BrownianBundle b = gen_bundle(561, 562, grid, M, 1, 1);
    ForwardSolution fwd = euler_forward(c, {0.5}, b);
    const BackwardBFunctional bb = make_bb(c, b);
    RegressionSpec reg;
    BDSDESolution base = solve_bdsde(c, fwd, b, bb, reg);
    base.forward = &fwd;
    // no tangent flow yet
    CHECK_THROWS_AS(solve_variational(c, fwd, b, bb, base, reg), std::invalid_argument);
    tangent_flow(c, fwd, b);
    CHECK_NOTHROW(solve_variational(c, fwd, b, bb, base, reg));
    // base tied to a different forward solution
    ForwardSolution other = euler_forward(c, {0.5}, b);
    tangent_flow(c, other, b);
    BDSDESolution wrong = base;
    wrong.forward = &other;
    CHECK_THROWS_AS(solve_variational(c, fwd, b, bb, wrong, reg), std::invalid_argument);
}
