#include <doctest.h>

#include "bdsde/bdsde_solver.hpp"
#include "bdsde/diagnostics.hpp"
#include "bdsde/presets.hpp"
#include "bdsde/scenario.hpp"
#include "test_util.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace bdsde;

TEST_CASE("domain box cube mirrors the coefficient dimensions") {
    CoefficientSet c = blank_scalar();
    c.d = 1;
    c.k = 1;
    c.l = 2;
    DomainBox box = DomainBox::cube(c, 1.5);
    CHECK(box.x_lo == std::vector<double>{-1.5});
    CHECK(box.x_hi == std::vector<double>{1.5});
    CHECK(box.y_lo.size() == 1);
    CHECK(box.z_lo.size() == 1);
    CHECK(box.e_lo.size() == 2);
    CHECK(box.e_hi == std::vector<double>{1.5, 1.5});
}

TEST_CASE("lipschitz estimate recovers the drift rate") {
    CoefficientSet c = make_preset("nonlinear-f-exp-decay", {{"rate", 2.0}});
    AssumptionReport rep = check_assumptions(c, 20000, DomainBox::cube(c, 2.0), 5);
    // fbar = -rate*y gives |df|^2/(|dy|^2+|dz|^2) with supremum rate^2
    CHECK(rep.c_f_hat == doctest::Approx(4.0).epsilon(0.05));
    CHECK(rep.c_f_hat <= 4.0 + 1e-9);
    CHECK(rep.h1_ok);
    CHECK(rep.h2_ok);
    CHECK(rep.h3_ok);
    CHECK(rep.violations.empty());
    CHECK(rep.alpha_hat == 0.0); // gbar is identically zero
    CHECK(rep.c_g_y_hat == 0.0);
}

TEST_CASE("contraction gate separates good and bad slopes") {
    CoefficientSet good = make_preset("contracting-g", {{"slope", 0.5}});
    AssumptionReport ok = check_assumptions(good, 8000, DomainBox::cube(good, 2.0), 9);
    CHECK(ok.alpha_hat == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(ok.h1_ok);
    CHECK(ok.h3_ok);
    CHECK(ok.h3_margin >= 0.0);
    CHECK(ok.violations.empty());

    CoefficientSet bad = make_preset("contracting-g", {{"slope", 1.5}});
    AssumptionReport rep = check_assumptions(bad, 8000, DomainBox::cube(bad, 2.0), 9);
    CHECK(rep.alpha_hat == doctest::Approx(2.25).epsilon(1e-9));
    CHECK(!rep.h1_ok);
    CHECK(!rep.h3_ok);
    CHECK(rep.h3_margin < 0.0);
    REQUIRE(!rep.violations.empty());
    bool names_h1 = false, names_h3 = false;
    for (const std::string& v : rep.violations) {
        if (v.find("(H1)") != std::string::npos) names_h1 = true;
        if (v.find("(H3)") != std::string::npos) names_h3 = true;
    }
    CHECK(names_h1);
    CHECK(names_h3);
}

TEST_CASE("h2 floor sits at the declared constant when gbar vanishes") {
    CoefficientSet c = make_preset("ou-linear");
    AssumptionReport rep = check_assumptions(c, 4096, DomainBox::cube(c, 2.0), 0);
    // gbar = 0, so the eigen test reduces to min_z z^2 + C with C = 2
    CHECK(rep.h2_min_eig == doctest::Approx(2.0).epsilon(0.01));
    CHECK(rep.h2_min_eig >= 2.0);
    CHECK(rep.h2_ok);
}

TEST_CASE("assumption sampling is seed-deterministic") {
    CoefficientSet c = make_preset("random-coeff-sine");
    AssumptionReport a = check_assumptions(c, 2048, DomainBox::cube(c, 2.0), 77);
    AssumptionReport b = check_assumptions(c, 2048, DomainBox::cube(c, 2.0), 77);
    CHECK(a.c_f_hat == b.c_f_hat);
    CHECK(a.alpha_hat == b.alpha_hat);
    CHECK(a.h2_min_eig == b.h2_min_eig);
    CHECK(a.h3_margin == b.h3_margin);
}

TEST_CASE("check_assumptions rejects malformed requests") {
    CoefficientSet c = make_preset("ou-linear");
    CHECK_THROWS_AS(check_assumptions(c, 0, DomainBox::cube(c, 2.0)), std::invalid_argument);
    DomainBox box = DomainBox::cube(c, 2.0);
    box.y_hi[0] = box.y_lo[0] - 1.0; // inverted side
    CHECK_THROWS_AS(check_assumptions(c, 64, box), std::invalid_argument);
}

TEST_CASE("moment diagnostics stay finite and track the payoff growth") {
    CoefficientSet c = make_preset("heat-quadratic");
    const TimeGrid grid{0.0, 1.0, 16};
    const std::vector<double> xs = {0.0, 1.0, 2.0};
    RegressionSpec reg;
    reg.degree = 2;

    std::vector<ForwardSolution> fwds;
    std::vector<BrownianBundle> bundles;
    fwds.reserve(xs.size());
    bundles.reserve(xs.size());
    std::vector<BDSDESolution> sols;
    for (std::size_t q = 0; q < xs.size(); ++q) {
        bundles.push_back(gen_bundle(300 + q, 400 + q, grid, 512, 1, 1));
        fwds.push_back(euler_forward(c, {xs[q]}, bundles.back()));
    }
    for (std::size_t q = 0; q < xs.size(); ++q) {
        BackwardBFunctional bb = backward_B(bundles[q], [&c](double t, double* out) { c.phi(t, out); });
        sols.push_back(solve_bdsde(c, fwds[q], bundles[q], bb, reg));
    }

    MomentReport rep = moment_diagnostics(sols, 2, xs);
    CHECK(rep.p == 2);
    CHECK(rep.x_values == xs);
    REQUIRE(rep.sup_y_moment.size() == xs.size());
    REQUIRE(rep.z_energy_moment.size() == xs.size());
    CHECK(rep.all_finite);
    for (double v : rep.sup_y_moment) CHECK(v > 0.0);
    for (double v : rep.z_energy_moment) CHECK(v > 0.0);
    // payoff x^2 makes sup E|Y|^2 increase with |x0|
    CHECK(rep.sup_y_moment[2] > rep.sup_y_moment[1]);
    CHECK(rep.sup_y_moment[1] > rep.sup_y_moment[0]);
    CHECK(std::isfinite(rep.q_hat));
    CHECK(rep.q_hat > 0.0);

    MomentReport rep4 = moment_diagnostics(sols, 4, xs);
    CHECK(rep4.all_finite);
    CHECK(rep4.sup_y_moment[2] > rep.sup_y_moment[2]); // fourth moment dominates at x=2

    CHECK_THROWS_AS(moment_diagnostics(sols, 3, xs), std::invalid_argument);
    CHECK_THROWS_AS(moment_diagnostics(sols, 2, {0.0}), std::invalid_argument);
}
