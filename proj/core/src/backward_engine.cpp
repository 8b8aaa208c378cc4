#include "bdsde/backward_engine.hpp"
#include "bdsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bdsde {

namespace {

[[noreturn]] void fail_node(const char* what, int node) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s at node %d", what, node);
    throw std::runtime_error(buf);
}

constexpr std::size_t kMaxWarnings = 60;

RegressionField zero_field(int d, int width) {
    RegressionField f;
    f.basis = BasisKind::global_poly;
    f.d = d;
    f.width = width;
    f.powers.assign(d, 0);
    f.mu.assign(d, 0.0);
    f.sd.assign(d, 1.0);
    f.coef.assign(width, 0.0);
    f.degenerate = true;
    return f;
}

void take_warnings(std::vector<std::string>& from, int node, std::vector<std::string>& into) {
    for (auto& w : from) {
        if (into.size() == kMaxWarnings) {
            into.push_back("further warnings suppressed");
            break;
        }
        if (into.size() < kMaxWarnings) into.push_back("node " + std::to_string(node) + ": " + w);
    }
    from.clear();
}

} // namespace

void BackwardResult::y_col(const ForwardSolution& fwd, int i, double* out) const {
    const int M = fwd.n_paths();
    if (i == grid.n_steps) {
        std::copy(y_terminal.begin(), y_terminal.end(), out);
        return;
    }
    y_field.at(i).eval_many(M, fwd.x_col(i), out);
}

void BackwardResult::z_col(const ForwardSolution& fwd, int i, double* out) const {
    const int M = fwd.n_paths();
    if (i == grid.n_steps) {
        std::copy(z_terminal.begin(), z_terminal.end(), out);
        return;
    }
    z_field.at(i).eval_many(M, fwd.x_col(i), out);
}

BackwardResult backward_sweep(BackwardDriver& driver, const ForwardSolution& fwd,
                              const BrownianBundle& bundle, const BackwardBFunctional& bback,
                              const BackwardOptions& opt) {
    const TimeGrid& grid = fwd.grid();
    if (!(bundle.grid == grid)) throw std::invalid_argument("backward_sweep: bundle grid differs from forward grid");
    if (!(bback.grid == grid)) throw std::invalid_argument("backward_sweep: backward functional grid differs");
    if (bback.l != bundle.l) throw std::invalid_argument("backward_sweep: backward functional width differs");
    if (opt.picard_inner < 1) throw std::invalid_argument("backward_sweep: picard_inner must be >= 1");
    if (opt.first_node < 0 || opt.first_node > grid.n_steps)
        throw std::invalid_argument("backward_sweep: first_node out of range");

    const int N = grid.n_steps;
    const int M = fwd.n_paths();
    const int d = fwd.dim();
    const int l = bundle.l;
    const int k = driver.y_width();
    const int zw = k * d;
    const double dt = grid.dt();

    BackwardResult res;
    res.grid = grid;
    res.k = k;
    res.d = d;
    res.zw = zw;
    res.y_field.resize(N + 1);
    res.z_field.resize(N);
    res.y_terminal.resize(static_cast<std::size_t>(M) * k);
    res.z_terminal.assign(static_cast<std::size_t>(M) * zw, 0.0);

    std::vector<double> y_right(static_cast<std::size_t>(M) * k);
    std::vector<double> z_right(static_cast<std::size_t>(M) * zw, 0.0);
    std::vector<double> gdb(static_cast<std::size_t>(M) * k);
    std::vector<double> cv(static_cast<std::size_t>(M) * k, 0.0);
    std::vector<double> yarg(static_cast<std::size_t>(M) * k);
    std::vector<double> ytar(static_cast<std::size_t>(M) * k);
    std::vector<double> ztar(static_cast<std::size_t>(M) * zw);
    std::vector<double> zfit(opt.z_second_pass ? static_cast<std::size_t>(M) * zw : 0);
    std::vector<double> payoff(static_cast<std::size_t>(M) * k);
    std::vector<std::string> fit_warn;

    const double* xN = fwd.x_col(N);
    parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t m = begin; m < end; ++m) {
            double* ym = y_right.data() + m * k;
            driver.terminal_y(static_cast<int>(m), xN + m * d, ym);
            for (int a = 0; a < k; ++a)
                if (!std::isfinite(ym[a])) fail_node("backward_sweep: non-finite terminal value", N);
        }
    });
    std::copy(y_right.begin(), y_right.end(), res.y_terminal.begin());
    std::copy(y_right.begin(), y_right.end(), payoff.begin());
    if (driver.has_terminal_z()) {
        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t m = begin; m < end; ++m)
                driver.terminal_z(static_cast<int>(m), xN + m * d, z_right.data() + m * zw);
        });
        std::copy(z_right.begin(), z_right.end(), res.z_terminal.begin());
    }
    res.y_field[N] = fit_regression(opt.reg, d, k, M, xN, y_right.data(), &fit_warn);
    take_warnings(fit_warn, N, res.warnings);

    for (int i = 0; i < opt.first_node; ++i) {
        res.y_field[i] = zero_field(d, k);
        res.z_field[i] = zero_field(d, zw);
    }

    for (int i = N - 1; i >= opt.first_node; --i) {
        const double *xl, *xr;
        fwd.x_pair(i, &xl, &xr);
        StepContext sc;
        sc.i = i;
        sc.dt = dt;
        sc.e_right = bback.at(i + 1);
        sc.db = bundle.dB.data() + static_cast<std::size_t>(i) * l;
        sc.x_left = xl;
        sc.x_right = xr;
        driver.begin_step(sc);

        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            std::vector<double> gbuf(static_cast<std::size_t>(k) * l);
            for (std::int64_t m = begin; m < end; ++m) {
                driver.g(sc, static_cast<int>(m), y_right.data() + m * k, z_right.data() + m * zw, gbuf.data());
                for (int a = 0; a < k; ++a) {
                    double s = 0.0;
                    for (int c = 0; c < l; ++c) s += gbuf[a * l + c] * sc.db[c];
                    if (!std::isfinite(s)) fail_node("backward_sweep: non-finite g payoff", i);
                    gdb[m * k + a] = s;
                }
            }
        });

        if (opt.z_control_variate)
            res.y_field[i + 1].eval_many(M, xl, cv.data());

        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t m = begin; m < end; ++m)
                for (int a = 0; a < k; ++a) {
                    double pay = y_right[m * k + a] - (opt.z_control_variate ? cv[m * k + a] : 0.0);
                    if (opt.include_gdb_in_z) pay += gdb[m * k + a];
                    for (int j = 0; j < d; ++j)
                        ztar[m * zw + a * d + j] = pay * bundle.dw(static_cast<int>(m), i, j) / dt;
                }
        });
        res.z_field[i] = fit_regression(opt.reg, d, zw, M, xl, ztar.data(), &fit_warn);
        take_warnings(fit_warn, i, res.warnings);

        if (opt.z_second_pass) {
            // Refit against targets corrected by a zero-mean martingale term:
            // E[(dW dWᵀ − dt I) | X_i] = 0, so subtracting ẑ(X_i)(dW dWᵀ − dt I)/dt
            // cancels the leading quadratic-variation noise of the payoff·dW target.
            res.z_field[i].eval_many(M, xl, zfit.data());
            parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t m = begin; m < end; ++m)
                    for (int a = 0; a < k; ++a)
                        for (int j = 0; j < d; ++j) {
                            double corr = 0.0;
                            for (int c = 0; c < d; ++c) {
                                const double qv = bundle.dw(static_cast<int>(m), i, c) * bundle.dw(static_cast<int>(m), i, j) -
                                                  (c == j ? dt : 0.0);
                                corr += zfit[m * zw + a * d + c] * qv;
                            }
                            ztar[m * zw + a * d + j] -= corr / dt;
                        }
            });
            res.z_field[i] = fit_regression(opt.reg, d, zw, M, xl, ztar.data(), &fit_warn);
            take_warnings(fit_warn, i, res.warnings);
        }

        const int inner = driver.f_depends_on_y() ? opt.picard_inner : 1;
        std::copy(y_right.begin(), y_right.end(), yarg.begin());
        for (int p = 0; p < inner; ++p) {
            parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
                std::vector<double> fbuf(k);
                for (std::int64_t m = begin; m < end; ++m) {
                    driver.f(sc, static_cast<int>(m), yarg.data() + m * k, z_right.data() + m * zw, fbuf.data());
                    for (int a = 0; a < k; ++a) {
                        const double v = y_right[m * k + a] + fbuf[a] * dt + gdb[m * k + a];
                        if (!std::isfinite(v)) fail_node("backward_sweep: non-finite y target", i);
                        ytar[m * k + a] = v;
                    }
                }
            });
            res.y_field[i] = fit_regression(opt.reg, d, k, M, xl, ytar.data(), &fit_warn);
            take_warnings(fit_warn, i, res.warnings);
            if (p + 1 < inner) res.y_field[i].eval_many(M, xl, yarg.data());
        }

        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t q = begin * k; q < end * k; ++q) payoff[q] += ytar[q] - y_right[q];
        });

        res.y_field[i].eval_many(M, xl, y_right.data());
        res.z_field[i].eval_many(M, xl, z_right.data());
    }

    // estimate at the first processed node and its per-path total-payoff SE
    res.y0.assign(k, 0.0);
    res.y0_se.assign(k, 0.0);
    std::vector<double> acc(static_cast<std::size_t>(3) * k, 0.0);
    parallel_reduce(M, acc.size(), [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
        for (std::int64_t m = begin; m < end; ++m)
            for (int a = 0; a < k; ++a) {
                p[a] += y_right[m * k + a];
                p[k + a] += payoff[m * k + a];
                p[2 * k + a] += payoff[m * k + a] * payoff[m * k + a];
            }
    }, acc.data());
    for (int a = 0; a < k; ++a) {
        res.y0[a] = acc[a] / M;
        const double mean = acc[k + a] / M;
        const double var = std::max(0.0, acc[2 * k + a] / M - mean * mean);
        res.y0_se[a] = std::sqrt(var / M);
    }
    return res;
}

} // namespace bdsde
