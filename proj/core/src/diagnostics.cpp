#include "bdsde/diagnostics.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/rng.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bdsde {

namespace {

struct UniformSampler {
    std::uint64_t seed, stream, ctr = 0;
    double next() {
        const auto b = philox::block(seed, stream, ctr++);
        return u64_open01((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
    }
    void box(const std::vector<double>& lo, const std::vector<double>& hi, double* out) {
        for (std::size_t q = 0; q < lo.size(); ++q) out[q] = lo[q] + (hi[q] - lo[q]) * next();
    }
};

void require_box_side(const std::vector<double>& lo, const std::vector<double>& hi, std::size_t n,
                      const char* name) {
    if (lo.size() != n || hi.size() != n) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "check_assumptions: box side %s must have %zu entries", name, n);
        throw std::invalid_argument(buf);
    }
    for (std::size_t q = 0; q < n; ++q)
        if (!std::isfinite(lo[q]) || !std::isfinite(hi[q]) || !(lo[q] <= hi[q])) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "check_assumptions: box side %s has invalid bounds", name);
            throw std::invalid_argument(buf);
        }
}

double sq_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
    return s;
}

} // namespace

DomainBox DomainBox::cube(const CoefficientSet& coeffs, double radius) {
    DomainBox box;
    box.x_lo.assign(coeffs.d, -radius);
    box.x_hi.assign(coeffs.d, radius);
    box.y_lo.assign(coeffs.k, -radius);
    box.y_hi.assign(coeffs.k, radius);
    box.z_lo.assign(static_cast<std::size_t>(coeffs.k) * coeffs.d, -radius);
    box.z_hi.assign(static_cast<std::size_t>(coeffs.k) * coeffs.d, radius);
    box.e_lo.assign(coeffs.l, -radius);
    box.e_hi.assign(coeffs.l, radius);
    return box;
}

AssumptionReport check_assumptions(const CoefficientSet& coeffs, int sample_count, const DomainBox& box,
                                   std::uint64_t seed) {
    coeffs.validate(true);
    if (sample_count < 1) throw std::invalid_argument("check_assumptions: sample_count must be >= 1");
    const int d = coeffs.d, k = coeffs.k, l = coeffs.l;
    const std::size_t zn = static_cast<std::size_t>(k) * d;
    const std::size_t gn = static_cast<std::size_t>(k) * l;
    require_box_side(box.x_lo, box.x_hi, d, "x");
    require_box_side(box.y_lo, box.y_hi, k, "y");
    require_box_side(box.z_lo, box.z_hi, zn, "z");
    require_box_side(box.e_lo, box.e_hi, l, "e");

    AssumptionReport rep;
    rep.declared_c = coeffs.declared_c;
    rep.declared_alpha = coeffs.declared_alpha;
    rep.declared_C = coeffs.declared_C;
    rep.h2_min_eig = std::numeric_limits<double>::infinity();
    rep.h3_margin = std::numeric_limits<double>::infinity();

    UniformSampler us{seed, rng_stream(RngDomain::scatter, 1)};
    const std::uint64_t theta_stream = rng_stream(RngDomain::scatter, 2);
    std::uint64_t theta_ctr = 0;

    std::vector<double> e(l), x(d), y(k), z(zn), y2(k), z2(zn);
    std::vector<double> f1(k), f2(k), g1(gn), g2(gn), jz(gn * zn), theta(zn), jth(gn);
    double theta_scale = 0.0;
    Eigen::MatrixXd S(k, k);

    for (int s = 0; s < sample_count; ++s) {
        us.box(box.e_lo, box.e_hi, e.data());
        us.box(box.x_lo, box.x_hi, x.data());
        us.box(box.y_lo, box.y_hi, y.data());
        us.box(box.z_lo, box.z_hi, z.data());
        us.box(box.y_lo, box.y_hi, y2.data());
        us.box(box.z_lo, box.z_hi, z2.data());

        coeffs.fbar(e.data(), x.data(), y.data(), z.data(), f1.data());
        coeffs.fbar(e.data(), x.data(), y2.data(), z2.data(), f2.data());
        const double den_f = sq_norm(y, y2) + sq_norm(z, z2);
        if (den_f > 1e-14) rep.c_f_hat = std::max(rep.c_f_hat, sq_norm(f1, f2) / den_f);

        coeffs.gbar(e.data(), x.data(), y.data(), z.data(), g1.data());
        coeffs.gbar(e.data(), x.data(), y2.data(), z.data(), g2.data());
        const double den_y = sq_norm(y, y2);
        if (den_y > 1e-14) rep.c_g_y_hat = std::max(rep.c_g_y_hat, sq_norm(g1, g2) / den_y);

        coeffs.gbar(e.data(), x.data(), y.data(), z2.data(), g2.data());
        const double den_z = sq_norm(z, z2);
        if (den_z > 1e-14) rep.alpha_hat = std::max(rep.alpha_hat, sq_norm(g1, g2) / den_z);

        // (H2): zz* + C·I − gg* positive semidefinite, as a k×k eigen test
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                double v = a == b ? coeffs.declared_C : 0.0;
                for (int j = 0; j < d; ++j) v += z[a * d + j] * z[b * d + j];
                for (int c = 0; c < l; ++c) v -= g1[a * l + c] * g1[b * l + c];
                S(a, b) = v;
            }
        rep.h2_min_eig = std::min(rep.h2_min_eig,
                                  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
                                      .eigenvalues().minCoeff());

        // (H3) at the sampled point: flattened Jacobian J of ḡ in z, largest
        // singular value plus directional tests θθ* − (J:θ)(J:θ)* ⪰ 0
        coeffs.gbar_dz(e.data(), x.data(), y.data(), z.data(), jz.data());
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(
            jz.data(), static_cast<int>(gn), static_cast<int>(zn));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> jj(J * J.transpose(), Eigen::EigenvaluesOnly);
        rep.h3_sigma_max = std::max(rep.h3_sigma_max, std::sqrt(std::max(0.0, jj.eigenvalues().maxCoeff())));
        for (int rep_theta = 0; rep_theta < 2; ++rep_theta) {
            for (std::size_t q = 0; q < zn; ++q)
                theta[q] = normal_at(seed, theta_stream, theta_ctr, static_cast<int>(q));
            ++theta_ctr;
            for (std::size_t r = 0; r < gn; ++r) {
                double v = 0.0;
                for (std::size_t q = 0; q < zn; ++q) v += jz[r * zn + q] * theta[q];
                jth[r] = v;
            }
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    double v = 0.0;
                    for (int j = 0; j < d; ++j) v += theta[a * d + j] * theta[b * d + j];
                    for (int c = 0; c < l; ++c) v -= jth[a * l + c] * jth[b * l + c];
                    S(a, b) = v;
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
            rep.h3_margin = std::min(rep.h3_margin, es.eigenvalues().minCoeff());
            double th2 = 0.0;
            for (std::size_t q = 0; q < zn; ++q) th2 += theta[q] * theta[q];
            theta_scale = std::max(theta_scale, th2);
        }
    }

    char buf[160];
    const double slack = 1.05;
    rep.h1_ok = true;
    if (rep.alpha_hat >= 1.0) {
        rep.h1_ok = false;
        std::snprintf(buf, sizeof(buf), "(H1): estimated alpha %.6g >= 1 (z-contraction of gbar fails)", rep.alpha_hat);
        rep.violations.push_back(buf);
    } else if (rep.alpha_hat > slack * rep.declared_alpha + 1e-12) {
        rep.h1_ok = false;
        std::snprintf(buf, sizeof(buf), "(H1): estimated alpha %.6g exceeds declared %.6g", rep.alpha_hat,
                      rep.declared_alpha);
        rep.violations.push_back(buf);
    }
    if (rep.c_f_hat > slack * rep.declared_c + 1e-12) {
        rep.h1_ok = false;
        std::snprintf(buf, sizeof(buf), "(H1): estimated c %.6g for fbar exceeds declared %.6g", rep.c_f_hat,
                      rep.declared_c);
        rep.violations.push_back(buf);
    }
    if (rep.c_g_y_hat > slack * rep.declared_c + 1e-12) {
        rep.h1_ok = false;
        std::snprintf(buf, sizeof(buf), "(H1): estimated c %.6g for gbar in y exceeds declared %.6g",
                      rep.c_g_y_hat, rep.declared_c);
        rep.violations.push_back(buf);
    }
    rep.h2_ok = rep.h2_min_eig >= -1e-9 * std::max(1.0, rep.declared_C);
    if (!rep.h2_ok) {
        std::snprintf(buf, sizeof(buf), "(H2): zz* + C·I - gg* has eigenvalue %.6g < 0", rep.h2_min_eig);
        rep.violations.push_back(buf);
    }
    rep.h3_ok = rep.h3_margin >= -1e-9 * std::max(1.0, theta_scale);
    if (!rep.h3_ok) {
        std::snprintf(buf, sizeof(buf), "(H3): directional test margin %.6g < 0 (sigma_max %.6g)",
                      rep.h3_margin, rep.h3_sigma_max);
        rep.violations.push_back(buf);
    }
    return rep;
}

MomentReport moment_diagnostics(const std::vector<BDSDESolution>& solutions, int p,
                                const std::vector<double>& x_values) {
    if (p != 2 && p != 4) throw std::invalid_argument("moment_diagnostics: p must be 2 or 4");
    if (solutions.empty() || solutions.size() != x_values.size())
        throw std::invalid_argument("moment_diagnostics: one solution per x value required");

    MomentReport rep;
    rep.p = p;
    rep.x_values = x_values;

    for (const auto& sol : solutions) {
        const ForwardSolution& fwd = *sol.forward;
        const int M = fwd.n_paths();
        const int N = sol.n_steps();
        const int k = sol.k();
        const int zw = sol.back.zw;
        const double dt = sol.back.grid.dt();
        std::vector<double> ybuf(static_cast<std::size_t>(M) * k), zbuf(static_cast<std::size_t>(M) * zw);
        std::vector<double> ymax(M, 0.0), zacc(M, 0.0);
        for (int i = 0; i <= N; ++i) {
            sol.y_col(i, ybuf.data());
            if (i < N) sol.z_col(i, zbuf.data());
            parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t m = begin; m < end; ++m) {
                    double yn = 0.0;
                    for (int a = 0; a < k; ++a) yn += ybuf[m * k + a] * ybuf[m * k + a];
                    ymax[m] = std::max(ymax[m], yn);
                    if (i < N) {
                        double zn2 = 0.0;
                        for (int a = 0; a < zw; ++a) zn2 += zbuf[m * zw + a] * zbuf[m * zw + a];
                        zacc[m] += zn2 * dt;
                    }
                }
            });
        }
        double acc[2] = {0.0, 0.0};
        parallel_reduce(M, 2, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* out) {
            for (std::int64_t m = begin; m < end; ++m) {
                out[0] += p == 2 ? ymax[m] : ymax[m] * ymax[m];
                out[1] += p == 2 ? zacc[m] : zacc[m] * zacc[m];
            }
        }, acc);
        rep.sup_y_moment.push_back(acc[0] / M);
        rep.z_energy_moment.push_back(acc[1] / M);
        if (!std::isfinite(acc[0]) || !std::isfinite(acc[1])) rep.all_finite = false;
    }

    // growth exponent: slope of log moment against log(1+|x|)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t q = 0; q < x_values.size(); ++q) {
        if (!(rep.sup_y_moment[q] > 0.0)) continue;
        const double lx = std::log(1.0 + std::fabs(x_values[q]));
        const double ly = std::log(rep.sup_y_moment[q]) / p * 2.0; // exponent of the underlying |Y| scale
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2 && sxx * n - sx * sx > 1e-12) rep.q_hat = (sxy * n - sx * sy) / (sxx * n - sx * sx);
    return rep;
}

} // namespace bdsde
