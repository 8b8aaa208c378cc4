#include <doctest.h>

#include "bdsde/parallel.hpp"
#include "bdsde/regression.hpp"
#include "bdsde/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

using namespace bdsde;

namespace {

std::vector<double> sample_x(int M, std::uint64_t seed, double scale = 1.0) {
    std::vector<double> x(M);
    for (int m = 0; m < M; ++m) x[m] = scale * normal_at(seed, rng_stream(RngDomain::scatter, 1), m, 0);
    return x;
}

} // namespace

TEST_CASE("polynomials in the span are reproduced exactly without ridge") {
    const int M = 400;
    const std::vector<double> x = sample_x(M, 10);
    std::vector<double> targets(M);
    for (int m = 0; m < M; ++m) targets[m] = 2.0 + 3.0 * x[m] - x[m] * x[m];
    RegressionSpec spec;
    spec.degree = 2;
    spec.ridge = 0.0;
    std::vector<std::string> warnings;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), targets.data(), &warnings);
    CHECK(warnings.empty());
    CHECK(!f.degenerate);
    CHECK(!f.ridged);
    CHECK(f.n_basis() == 3);
    for (double p : {-2.0, -0.5, 0.0, 1.3, 2.7}) {
        const double want = 2.0 + 3.0 * p - p * p;
        CHECK(f.eval1(&p) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("base ridge keeps the exact fit within float noise") {
    const int M = 400;
    const std::vector<double> x = sample_x(M, 11);
    std::vector<double> targets(M);
    for (int m = 0; m < M; ++m) targets[m] = 1.0 - 0.5 * x[m];
    RegressionSpec spec;
    spec.degree = 3;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), targets.data(), nullptr);
    for (double p : {-1.0, 0.0, 2.0}) {
        const double want = 1.0 - 0.5 * p;
        CHECK(f.eval1(&p) == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("regression estimates a conditional expectation") {
    const int M = 20000;
    const std::vector<double> x = sample_x(M, 12);
    std::vector<double> targets(M);
    for (int m = 0; m < M; ++m) {
        const double noise = normal_at(500, rng_stream(RngDomain::scatter, 2), m, 0);
        targets[m] = x[m] * x[m] + 0.5 * noise;
    }
    RegressionSpec spec;
    spec.degree = 3;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), targets.data(), nullptr);
    for (double p : {-1.0, 0.0, 0.5, 1.5}) {
        CHECK(std::fabs(f.eval1(&p) - p * p) < 0.05);
    }
}

TEST_CASE("multivariate basis covers cross terms") {
    const int M = 3000, d = 2;
    std::vector<double> x(static_cast<std::size_t>(M) * d);
    for (int m = 0; m < M; ++m)
        for (int a = 0; a < d; ++a)
            x[static_cast<std::size_t>(m) * d + a] = normal_at(13, rng_stream(RngDomain::scatter, 3), m, a);
    std::vector<double> targets(M);
    for (int m = 0; m < M; ++m) {
        const double u = x[2 * m], v = x[2 * m + 1];
        targets[m] = 1.0 + u * v - 2.0 * v;
    }
    RegressionSpec spec;
    spec.degree = 2;
    spec.ridge = 0.0;
    RegressionField f = fit_regression(spec, d, 1, M, x.data(), targets.data(), nullptr);
    CHECK(f.n_basis() == 6); // 1, u, v, u^2, uv, v^2
    const double probe[2] = {0.7, -1.2};
    CHECK(f.eval1(probe) == doctest::Approx(1.0 + 0.7 * -1.2 - 2.0 * -1.2).epsilon(1e-9));
}

TEST_CASE("piecewise linear hats reproduce piecewise linear data") {
    const int M = 2000;
    std::vector<double> x(M);
    for (int m = 0; m < M; ++m) x[m] = -2.0 + 4.0 * (m + 0.5) / M;
    std::vector<double> targets(M);
    for (int m = 0; m < M; ++m) targets[m] = std::fabs(x[m]);
    RegressionSpec spec;
    spec.basis = BasisKind::piecewise_linear;
    spec.bins = 4; // knots at -2,-1,0,1,2 after standardization
    spec.ridge = 0.0;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), targets.data(), nullptr);
    for (double p : {-1.5, -1.0, -0.25, 0.5, 1.75}) {
        CHECK(f.eval1(&p) == doctest::Approx(std::fabs(p)).epsilon(1e-8));
    }
    // clamped outside the sample range
    double far = 9.0;
    const double edge = f.eval1(&far);
    double at2 = 1.999;
    CHECK(edge == doctest::Approx(f.eval1(&at2)).epsilon(1e-3));
}

TEST_CASE("width > 1 fits each component") {
    const int M = 500;
    const std::vector<double> x = sample_x(M, 14);
    std::vector<double> targets(static_cast<std::size_t>(M) * 2);
    for (int m = 0; m < M; ++m) {
        targets[2 * m] = 3.0 * x[m];
        targets[2 * m + 1] = -1.0 + x[m] * x[m];
    }
    RegressionSpec spec;
    spec.degree = 2;
    spec.ridge = 0.0;
    RegressionField f = fit_regression(spec, 1, 2, M, x.data(), targets.data(), nullptr);
    double out[2];
    const double p = 0.8;
    f.eval(&p, out);
    CHECK(out[0] == doctest::Approx(2.4).epsilon(1e-9));
    CHECK(out[1] == doctest::Approx(-1.0 + 0.64).epsilon(1e-9));
}

TEST_CASE("single sample and point-supported samples fall back to a constant") {
    RegressionSpec spec;
    std::vector<std::string> warnings;
    const double x1 = 0.7, t1 = 4.2;
    RegressionField f1 = fit_regression(spec, 1, 1, 1, &x1, &t1, &warnings);
    CHECK(f1.degenerate);
    CHECK(!warnings.empty());
    const double probe = -3.0;
    CHECK(f1.eval1(&probe) == 4.2);

    // point-supported sample: silent constant fit (this is the normal
    // situation at the first node, where every path starts at x0)
    std::vector<double> xs(50, 1.5), ts(50);
    for (int m = 0; m < 50; ++m) ts[m] = 1.0 + 0.1 * m;
    warnings.clear();
    RegressionField f2 = fit_regression(spec, 1, 1, 50, xs.data(), ts.data(), &warnings);
    CHECK(f2.degenerate);
    CHECK(warnings.empty());
    double mean = 0.0;
    for (double t : ts) mean += t;
    mean /= 50;
    CHECK(f2.eval1(&probe) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("degree drops when the sample is smaller than the basis") {
    RegressionSpec spec;
    spec.degree = 5;
    std::vector<double> x = {0.0, 1.0, 2.0};
    std::vector<double> t = {1.0, 2.0, 3.0};
    std::vector<std::string> warnings;
    RegressionField f = fit_regression(spec, 1, 1, 3, x.data(), t.data(), &warnings);
    CHECK(f.n_basis() <= 3);
    bool lowered = false;
    for (const auto& w : warnings) lowered = lowered || w.find("lowered") != std::string::npos;
    CHECK(lowered);
}

TEST_CASE("collinear designs escalate the ridge instead of failing") {
    // x only takes two values, so x^2 is collinear with {1, x}
    const int M = 200;
    std::vector<double> x(M), t(M);
    for (int m = 0; m < M; ++m) {
        x[m] = (m % 2 == 0) ? -1.0 : 1.0;
        t[m] = 2.0 + x[m];
    }
    RegressionSpec spec;
    spec.degree = 3;
    spec.ridge = 0.0;
    std::vector<std::string> warnings;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), t.data(), &warnings);
    CHECK(f.ridged);
    CHECK(!warnings.empty());
    for (double c : f.coef) CHECK(std::isfinite(c));
    double p = 1.0;
    CHECK(f.eval1(&p) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("fit is deterministic and thread-count invariant") {
    const int M = 5000;
    const std::vector<double> x = sample_x(M, 15);
    std::vector<double> t(M);
    for (int m = 0; m < M; ++m) t[m] = std::sin(x[m]);
    RegressionSpec spec;
    spec.degree = 4;
    set_max_threads(1);
    RegressionField f1 = fit_regression(spec, 1, 1, M, x.data(), t.data(), nullptr);
    set_max_threads(4);
    RegressionField f4 = fit_regression(spec, 1, 1, M, x.data(), t.data(), nullptr);
    set_max_threads(0);
    CHECK(f1.coef == f4.coef);
    CHECK(f1.mu == f4.mu);
    CHECK(f1.sd == f4.sd);
}

TEST_CASE("eval_many agrees with eval") {
    const int M = 64;
    const std::vector<double> x = sample_x(M, 16);
    std::vector<double> t(M);
    for (int m = 0; m < M; ++m) t[m] = x[m] * x[m];
    RegressionSpec spec;
    RegressionField f = fit_regression(spec, 1, 1, M, x.data(), t.data(), nullptr);
    std::vector<double> out(M);
    f.eval_many(M, x.data(), out.data());
    for (int m = 0; m < M; ++m) CHECK(out[m] == f.eval1(&x[m]));
}

TEST_CASE("invalid arguments are rejected") {
    RegressionSpec spec;
    const double x = 0.0, t = 0.0;
    CHECK_THROWS_AS(fit_regression(spec, 0, 1, 1, &x, &t, nullptr), std::invalid_argument);
    spec.ridge = -1.0;
    CHECK_THROWS_AS(fit_regression(spec, 1, 1, 1, &x, &t, nullptr), std::invalid_argument);
    RegressionSpec hats;
    hats.basis = BasisKind::piecewise_linear;
    CHECK_THROWS_AS(fit_regression(hats, 2, 1, 1, &x, &t, nullptr), std::invalid_argument);
}
