#include "bdsde/spde.hpp"
#include "bdsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bdsde {

namespace {

constexpr double kTheta = 0.5;

[[noreturn]] void fail_node(const char* fmt, int i) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, i);
    throw std::runtime_error(buf);
}

void fill_derivs(const double* r, int J, double dx, double* ux, double* uxx) {
    const int n = J + 2;
    ux[0] = (r[1] - r[0]) / dx;
    ux[n - 1] = (r[n - 1] - r[n - 2]) / dx;
    uxx[0] = 0.0;
    uxx[n - 1] = 0.0;
    for (int j = 1; j <= J; ++j) {
        ux[j] = (r[j + 1] - r[j - 1]) / (2.0 * dx);
        uxx[j] = (r[j + 1] - 2.0 * r[j] + r[j - 1]) / (dx * dx);
    }
}

// Ghost values freeze the second difference across the edge (u_xxx = 0
// extrapolation), so the curvature seen by the edge rows copies the
// adjacent interior one. Exact for data up to cubics.
double ghost_lo(const double* r) { return 3.0 * r[1] - 3.0 * r[2] + r[3]; }
double ghost_hi(const double* r, int n) { return 3.0 * r[n - 2] - 3.0 * r[n - 3] + r[n - 4]; }

// Thomas factorization of the theta-step matrix over the interior unknowns.
// Eliminating the ghosts turns the edge rows into one-sided stencils that
// also touch the second neighbor (u_3 in row 1, u_{J-2} in row J); one exact
// row combination with the adjacent row removes the corner entry and
// restores tridiagonal form. m_lo and m_hi replay that combination on each
// right-hand side.
struct Tridiag {
    int J = 0;
    double m_lo = 0.0, m_hi = 0.0;
    std::vector<double> sub, cp, denom; // 1-based over j=1..J

    void factor(int nJ, double coef, double dx, const std::vector<double>& sig2, const std::vector<double>& bb) {
        J = nJ;
        std::vector<double> lo(J + 1, 0.0), di(J + 1, 0.0), hi(J + 1, 0.0);
        double corner_lo = 0.0, corner_hi = 0.0; // row 1 entry on u_3, row J entry on u_{J-2}
        for (int j = 1; j <= J; ++j) {
            const double sd = 0.5 * sig2[j] / (dx * dx);
            const double ad = bb[j] / (2.0 * dx);
            if (j == 1) {
                di[j] = 1.0 - coef * (sd - 3.0 * ad);
                hi[j] = coef * (2.0 * sd - 4.0 * ad);
                corner_lo = -coef * (sd - ad);
            } else if (j == J) {
                lo[j] = coef * (2.0 * sd + 4.0 * ad);
                di[j] = 1.0 - coef * (sd + 3.0 * ad);
                corner_hi = -coef * (sd + ad);
            } else {
                lo[j] = -coef * (sd - ad);
                di[j] = 1.0 + coef * sig2[j] / (dx * dx);
                hi[j] = -coef * (sd + ad);
            }
        }
        if (!(std::fabs(hi[2]) > 0.0) || !(std::fabs(lo[J - 1]) > 0.0))
            throw std::runtime_error("solve_spde: singular tridiagonal system in the theta scheme");
        m_lo = corner_lo / hi[2];
        di[1] -= m_lo * lo[2];
        hi[1] -= m_lo * di[2];
        m_hi = corner_hi / lo[J - 1];
        lo[J] -= m_hi * di[J - 1];
        di[J] -= m_hi * hi[J - 1];

        sub = lo;
        cp.assign(J + 1, 0.0);
        denom.assign(J + 1, 0.0);
        for (int j = 1; j <= J; ++j) {
            const double den = j == 1 ? di[j] : di[j] - sub[j] * cp[j - 1];
            if (!(std::fabs(den) > 0.0) || !std::isfinite(den))
                throw std::runtime_error("solve_spde: singular tridiagonal system in the theta scheme");
            denom[j] = den;
            cp[j] = hi[j] / den;
        }
    }

    // solves in place on r[1..J]
    void solve(double* r, double* work) const {
        const double r2 = r[2], rp = r[J - 1];
        r[1] -= m_lo * r2;
        r[J] -= m_hi * rp;
        work[1] = r[1] / denom[1];
        for (int j = 2; j <= J; ++j) work[j] = (r[j] - sub[j] * work[j - 1]) / denom[j];
        r[J] = work[J];
        for (int j = J - 1; j >= 1; --j) r[j] = work[j] - cp[j] * r[j + 1];
    }
};

} // namespace

void SpaceGrid::validate() const {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw std::invalid_argument("SpaceGrid: requires finite x_min < x_max");
    if (J < 3) throw std::invalid_argument("SpaceGrid: requires J >= 3");
}

double RandomFieldU::value(int i, double x) const {
    const double* r = row(i);
    const int n = space.n_nodes();
    double p = (x - space.x_min) / space.dx();
    p = std::min(std::max(p, 0.0), static_cast<double>(n - 1));
    const int j0 = std::min(static_cast<int>(p), n - 2);
    const double w = p - j0;
    return (1.0 - w) * r[j0] + w * r[j0 + 1];
}

double RandomFieldU::value_ux(int i, double x) const {
    const double* r = ux_row(i);
    const int n = space.n_nodes();
    double p = (x - space.x_min) / space.dx();
    p = std::min(std::max(p, 0.0), static_cast<double>(n - 1));
    const int j0 = std::min(static_cast<int>(p), n - 2);
    const double w = p - j0;
    return (1.0 - w) * r[j0] + w * r[j0 + 1];
}

void generator_apply(const double* u_row, const SpaceGrid& space, const CoefficientSet& coeffs, double* out) {
    space.validate();
    if (coeffs.d != 1) throw std::invalid_argument("generator_apply: requires d = 1");
    const int J = space.J;
    const double dx = space.dx();
    out[0] = 0.0;
    out[J + 1] = 0.0;
    for (int j = 1; j <= J; ++j) {
        const double x = space.node(j);
        double sg, bv;
        coeffs.sigma(&x, &sg);
        coeffs.b(&x, &bv);
        out[j] = 0.5 * sg * sg * (u_row[j + 1] - 2.0 * u_row[j] + u_row[j - 1]) / (dx * dx) +
                 bv * (u_row[j + 1] - u_row[j - 1]) / (2.0 * dx);
    }
}

std::vector<double> generator_apply(const std::vector<double>& u_row, const SpaceGrid& space,
                                    const CoefficientSet& coeffs) {
    if (u_row.size() != static_cast<std::size_t>(space.n_nodes()))
        throw std::invalid_argument("generator_apply: row length must be J+2");
    std::vector<double> out(u_row.size());
    generator_apply(u_row.data(), space, coeffs, out.data());
    return out;
}

RandomFieldU solve_spde(const CoefficientSet& coeffs, const BrownianBundle& bundle,
                        const BackwardBFunctional& bback, const SpaceGrid& space, SpdeScheme scheme) {
    coeffs.validate(false);
    space.validate();
    if (coeffs.d != 1 || coeffs.k != 1)
        throw std::invalid_argument("solve_spde: the finite-difference side requires d = k = 1");
    if (coeffs.l < 1 || coeffs.l > 2)
        throw std::invalid_argument("solve_spde: requires l in {1,2}");
    if (bundle.l != coeffs.l) throw std::invalid_argument("solve_spde: bundle noise width mismatch");
    if (!(bundle.grid == bback.grid)) throw std::invalid_argument("solve_spde: backward functional grid mismatch");

    const TimeGrid& grid = bundle.grid;
    const int N = grid.n_steps;
    const int J = space.J;
    const int n = space.n_nodes();
    const int l = coeffs.l;
    const double dt = grid.dt();
    const double dx = space.dx();

    std::vector<double> xs(n), sig(n), sig2(n), bb(n);
    for (int j = 0; j < n; ++j) {
        xs[j] = space.node(j);
        coeffs.sigma(&xs[j], &sig[j]);
        coeffs.b(&xs[j], &bb[j]);
        sig2[j] = sig[j] * sig[j];
    }

    if (scheme == SpdeScheme::explicit_euler) {
        const double maxs2 = *std::max_element(sig2.begin(), sig2.end());
        if (maxs2 > 0.0) {
            const double dt_max = dx * dx / maxs2;
            if (dt > dt_max * (1.0 + 1e-12)) {
                const int need = static_cast<int>(std::ceil((grid.T - grid.t0) / dt_max));
                char buf[200];
                std::snprintf(buf, sizeof buf,
                              "solve_spde: explicit scheme violates CFL: dt=%.9g > dx^2/max(sigma^2)=%.9g; "
                              "use n_steps >= %d or the theta scheme",
                              dt, dt_max, need);
                throw std::invalid_argument(buf);
            }
        }
    }

    Tridiag tri;
    if (scheme == SpdeScheme::theta_implicit) tri.factor(J, kTheta * dt, dx, sig2, bb);

    RandomFieldU field;
    field.grid = grid;
    field.space = space;
    field.b_seed = bundle.seed_b;
    field.u.assign(static_cast<std::size_t>(N + 1) * n, 0.0);
    field.ux.assign(field.u.size(), 0.0);
    field.uxx.assign(field.u.size(), 0.0);

    double* rN = field.u.data() + static_cast<std::size_t>(N) * n;
    for (int j = 0; j < n; ++j) coeffs.h(&xs[j], rN + j);
    fill_derivs(rN, J, dx, field.ux.data() + static_cast<std::size_t>(N) * n,
                field.uxx.data() + static_cast<std::size_t>(N) * n);

    std::vector<double> work(J + 1);
    std::vector<double> db(l);
    for (int i = N - 1; i >= 0; --i) {
        const double* up = field.row(i + 1);
        const double* upx = field.ux_row(i + 1);
        const double* upxx = field.uxx_row(i + 1);
        const double* e = bback.at(i + 1);
        for (int c = 0; c < l; ++c) db[c] = bundle.db(i, c);
        double* r = field.u.data() + static_cast<std::size_t>(i) * n;

        const double lu_weight = scheme == SpdeScheme::explicit_euler ? dt : (1.0 - kTheta) * dt;
        parallel_for(J, [&](std::int64_t begin, std::int64_t end) {
            std::vector<double> g(l);
            for (std::int64_t q = begin; q < end; ++q) {
                const int j = static_cast<int>(q) + 1;
                const double z = sig[j] * upx[j];
                double fv;
                coeffs.fbar(e, &xs[j], &up[j], &z, &fv);
                coeffs.gbar(e, &xs[j], &up[j], &z, g.data());
                double gdb = 0.0;
                for (int c = 0; c < l; ++c) gdb += g[c] * db[c];
                const double lu = 0.5 * sig2[j] * upxx[j] + bb[j] * upx[j];
                r[j] = up[j] + lu_weight * lu + dt * fv + gdb;
            }
        });

        if (scheme == SpdeScheme::theta_implicit) tri.solve(r, work.data());
        r[0] = ghost_lo(r);
        r[n - 1] = ghost_hi(r, n);

        for (int j = 0; j < n; ++j)
            if (!std::isfinite(r[j])) fail_node("solve_spde: non-finite field at node %d", i);
        fill_derivs(r, J, dx, field.ux.data() + static_cast<std::size_t>(i) * n,
                    field.uxx.data() + static_cast<std::size_t>(i) * n);
    }
    return field;
}

} // namespace bdsde
