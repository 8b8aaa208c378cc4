#include "bdsde/regression.hpp"
#include "bdsde/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

void enumerate_powers(int d, int degree, std::vector<int>& table) {
    // graded order: total degree 0, 1, ..., lexicographic within a grade
    std::vector<int> cur(d, 0);
    for (int g = 0; g <= degree; ++g) {
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == d - 1) {
                cur[pos] = left;
                table.insert(table.end(), cur.begin(), cur.end());
                return;
            }
            for (int e = left; e >= 0; --e) {
                cur[pos] = e;
                rec(pos + 1, left - e);
            }
        };
        rec(0, g);
    }
}

void basis_row(const RegressionField& f, const double* t, double* phi) {
    const int nb = f.n_basis();
    if (f.basis == BasisKind::global_poly) {
        for (int q = 0; q < nb; ++q) {
            double v = 1.0;
            for (int a = 0; a < f.d; ++a) {
                const int p = f.powers[static_cast<std::size_t>(q) * f.d + a];
                for (int e = 0; e < p; ++e) v *= t[a];
            }
            phi[q] = v;
        }
        return;
    }
    // hat functions on knots, constant extension outside the range
    std::fill(phi, phi + nb, 0.0);
    const int cells = nb - 1;
    const double lo = f.knots.front(), hi = f.knots.back();
    const double u = std::clamp(t[0], lo, hi);
    const double dk = (hi - lo) / cells;
    int c = dk > 0.0 ? std::min(static_cast<int>((u - lo) / dk), cells - 1) : 0;
    const double s = dk > 0.0 ? (u - (lo + c * dk)) / dk : 0.0;
    phi[c] = 1.0 - s;
    phi[c + 1] = s;
}

} // namespace

int RegressionField::n_basis() const {
    if (basis == BasisKind::global_poly) return static_cast<int>(powers.size()) / d;
    return static_cast<int>(knots.size());
}

void RegressionField::eval(const double* x, double* out) const {
    const int nb = n_basis();
    double tbuf[8];
    std::vector<double> theap;
    double* t = tbuf;
    if (d > 8) {
        theap.resize(d);
        t = theap.data();
    }
    for (int a = 0; a < d; ++a) t[a] = (x[a] - mu[a]) / sd[a];
    double pbuf[64];
    std::vector<double> pheap;
    double* phi = pbuf;
    if (nb > 64) {
        pheap.resize(nb);
        phi = pheap.data();
    }
    basis_row(*this, t, phi);
    for (int c = 0; c < width; ++c) {
        double v = 0.0;
        for (int q = 0; q < nb; ++q) v += phi[q] * coef[static_cast<std::size_t>(q) * width + c];
        out[c] = v;
    }
}

double RegressionField::eval1(const double* x) const {
    double v;
    eval(x, &v);
    return v;
}

void RegressionField::eval_many(int M, const double* x, double* out) const {
    parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t m = begin; m < end; ++m)
            eval(x + static_cast<std::size_t>(m) * d, out + static_cast<std::size_t>(m) * width);
    });
}

RegressionField fit_regression(const RegressionSpec& spec, int d, int width, int M,
                               const double* x, const double* targets,
                               std::vector<std::string>* warnings) {
    if (d < 1 || width < 1 || M < 1) throw std::invalid_argument("fit_regression: d, width, M must be positive");
    if (spec.degree < 0 || spec.bins < 1 || spec.ridge < 0)
        throw std::invalid_argument("fit_regression: invalid RegressionSpec");
    if (spec.basis == BasisKind::piecewise_linear && d != 1)
        throw std::invalid_argument("fit_regression: piecewise-linear basis requires d=1");

    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    RegressionField f;
    f.basis = spec.basis;
    f.d = d;
    f.width = width;
    f.mu.assign(d, 0.0);
    f.sd.assign(d, 1.0);

    // standardization moments
    std::vector<double> ms(static_cast<std::size_t>(2) * d);
    parallel_reduce(M, ms.size(), [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
        for (std::int64_t m = begin; m < end; ++m)
            for (int a = 0; a < d; ++a) {
                const double v = x[static_cast<std::size_t>(m) * d + a];
                p[a] += v;
                p[d + a] += v * v;
            }
    }, ms.data());
    bool some_spread = false;
    for (int a = 0; a < d; ++a) {
        f.mu[a] = ms[a] / M;
        const double var = std::max(0.0, ms[d + a] / M - f.mu[a] * f.mu[a]);
        const double sd = std::sqrt(var);
        if (sd > 1e-12 * (1.0 + std::fabs(f.mu[a]))) {
            f.sd[a] = sd;
            some_spread = true;
        } else {
            f.sd[a] = 1.0;
        }
    }

    const auto constant_fit = [&]() {
        f.degenerate = true;
        f.basis = BasisKind::global_poly;
        f.powers.assign(d, 0);
        f.coef.assign(width, 0.0);
        parallel_reduce(M, static_cast<std::size_t>(width),
                        [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
                            for (std::int64_t m = begin; m < end; ++m)
                                for (int c = 0; c < width; ++c)
                                    p[c] += targets[static_cast<std::size_t>(m) * width + c];
                        }, f.coef.data());
        for (int c = 0; c < width; ++c) f.coef[c] /= M;
        return f;
    };

    if (M == 1) {
        warn("regression: single-path sample, constant fit");
        return constant_fit();
    }
    if (!some_spread) return constant_fit();

    if (spec.basis == BasisKind::global_poly) {
        int degree = spec.degree;
        auto count = [&](int deg) {
            long n = 1;
            for (int a = 1; a <= d; ++a) n = n * (deg + a) / a;
            return n;
        };
        while (degree > 0 && count(degree) > M) --degree;
        if (degree < spec.degree) warn("regression: degree lowered to fit sample size");
        enumerate_powers(d, degree, f.powers);
    } else {
        double lo = x[0], hi = x[0];
        for (int m = 1; m < M; ++m) {
            lo = std::min(lo, x[m]);
            hi = std::max(hi, x[m]);
        }
        if (!(hi - lo > 1e-12 * (1.0 + std::fabs(lo)))) return constant_fit();
        int bins = std::min(spec.bins, std::max(1, M - 1));
        if (bins < spec.bins) warn("regression: bin count lowered to fit sample size");
        const double tlo = (lo - f.mu[0]) / f.sd[0];
        const double thi = (hi - f.mu[0]) / f.sd[0];
        f.knots.resize(bins + 1);
        for (int q = 0; q <= bins; ++q) f.knots[q] = tlo + (thi - tlo) * q / bins;
    }

    const int nb = f.n_basis();
    const std::size_t na = static_cast<std::size_t>(nb) * nb;
    std::vector<double> acc(na + static_cast<std::size_t>(nb) * width);
    parallel_reduce(M, acc.size(), [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
        std::vector<double> t(d), phi(nb);
        for (std::int64_t m = begin; m < end; ++m) {
            const double* xm = x + static_cast<std::size_t>(m) * d;
            for (int a = 0; a < d; ++a) t[a] = (xm[a] - f.mu[a]) / f.sd[a];
            basis_row(f, t.data(), phi.data());
            for (int q = 0; q < nb; ++q) {
                for (int r = 0; r <= q; ++r) p[static_cast<std::size_t>(q) * nb + r] += phi[q] * phi[r];
                for (int c = 0; c < width; ++c)
                    p[na + static_cast<std::size_t>(q) * width + c] +=
                        phi[q] * targets[static_cast<std::size_t>(m) * width + c];
            }
        }
    }, acc.data());

    Eigen::MatrixXd A(nb, nb);
    for (int q = 0; q < nb; ++q)
        for (int r = 0; r < nb; ++r) A(q, r) = acc[static_cast<std::size_t>(std::max(q, r)) * nb + std::min(q, r)];
    Eigen::MatrixXd B(nb, width);
    for (int q = 0; q < nb; ++q)
        for (int c = 0; c < width; ++c) B(q, c) = acc[na + static_cast<std::size_t>(q) * width + c];

    const double scale = A.trace() / nb;
    A.diagonal().array() += spec.ridge * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double ev_min = es.eigenvalues().minCoeff();
    const double ev_max = es.eigenvalues().maxCoeff();
    if (!(ev_min > 1e-12 * ev_max)) {
        A.diagonal().array() += (1e6 * spec.ridge + 1e-12) * std::max(scale, ev_max / nb);
        f.ridged = true;
        warn("regression: near-singular normal matrix, ridge escalated");
    }
    Eigen::MatrixXd C = A.ldlt().solve(B);
    if (!C.allFinite()) throw std::runtime_error("fit_regression: non-finite coefficients");
    f.coef.resize(static_cast<std::size_t>(nb) * width);
    for (int q = 0; q < nb; ++q)
        for (int c = 0; c < width; ++c) f.coef[static_cast<std::size_t>(q) * width + c] = C(q, c);

    // a constant target column is reproduced exactly instead of through the
    // normal equations, which leave O(eps) dust on the non-constant terms
    for (int c = 0; c < width; ++c) {
        const double v0 = targets[c];
        bool constant = true;
        for (int m = 1; m < M && constant; ++m)
            constant = targets[static_cast<std::size_t>(m) * width + c] == v0;
        if (!constant) continue;
        if (f.basis == BasisKind::global_poly) {
            f.coef[c] = v0;
            for (int q = 1; q < nb; ++q) f.coef[static_cast<std::size_t>(q) * width + c] = 0.0;
        } else {
            for (int q = 0; q < nb; ++q) f.coef[static_cast<std::size_t>(q) * width + c] = v0;
        }
    }
    return f;
}

} // namespace bdsde
