#include "bdsde/malliavin.hpp"
#include "bdsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

// Linear backward system around a frozen base solution. The forcing column
// is gradX (gradient layer) or D_thetaX (Malliavin layer); coefficient
// derivatives are cached per step for all paths.
class LinearDriver : public BackwardDriver {
public:
    LinearDriver(const CoefficientSet& c, const ForwardSolution& fwd, const BDSDESolution& base,
                 const MalliavinDX* dx)
        : c_(c), fwd_(fwd), base_(base), dx_(dx) {
        const std::size_t M = fwd.n_paths();
        const int d = c.d, k = c.k, l = c.l;
        by_.resize(M * k);
        bz_.resize(M * k * d);
        fdx_.resize(M * k * d);
        fdy_.resize(M * k * k);
        fdz_.resize(M * k * k * d);
        gdx_.resize(M * k * l * d);
        gdy_.resize(M * k * l * k);
        gdz_.resize(M * k * l * k * d);
        if (dx_) {
            fx_store_.resize(M * d * d);
            fxN_.resize(M * d * d);
            const double* gN = fwd.gradx_col(fwd.grid().n_steps);
            mul_cols(gN, dx_->r_theta.data(), fxN_.data(), static_cast<int>(M), d);
            fxN_ptr_ = fxN_.data();
        } else {
            fxN_ptr_ = fwd.gradx_col(fwd.grid().n_steps);
        }
    }

    int y_width() const override { return c_.k * c_.d; }

    void begin_step(const StepContext& ctx) override {
        const int M = fwd_.n_paths();
        const int d = c_.d, k = c_.k, l = c_.l;
        base_.back.y_col(fwd_, ctx.i + 1, by_.data());
        base_.back.z_col(fwd_, ctx.i + 1, bz_.data());
        const double *gl, *gr;
        fwd_.gradx_pair(ctx.i, &gl, &gr);
        if (dx_) {
            mul_cols(gr, dx_->r_theta.data(), fx_store_.data(), M, d);
            fx_ = fx_store_.data();
        } else {
            fx_ = gr;
        }
        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t m = begin; m < end; ++m) {
                const double* x = ctx.x_right + m * d;
                const double* y = by_.data() + m * k;
                const double* z = bz_.data() + m * k * d;
                c_.fbar_dx(ctx.e_right, x, y, z, fdx_.data() + m * k * d);
                c_.fbar_dy(ctx.e_right, x, y, z, fdy_.data() + m * k * k);
                c_.fbar_dz(ctx.e_right, x, y, z, fdz_.data() + m * k * k * d);
                c_.gbar_dx(ctx.e_right, x, y, z, gdx_.data() + m * k * l * d);
                c_.gbar_dy(ctx.e_right, x, y, z, gdy_.data() + m * k * l * k);
                c_.gbar_dz(ctx.e_right, x, y, z, gdz_.data() + m * k * l * k * d);
            }
        });
    }

    void terminal_y(int m, const double* x, double* out) const override {
        const int d = c_.d, k = c_.k;
        std::vector<double> hd(static_cast<std::size_t>(k) * d);
        c_.h_dx(x, hd.data());
        const double* fx = fxN_ptr_ + static_cast<std::size_t>(m) * d * d;
        for (int a = 0; a < k; ++a)
            for (int q = 0; q < d; ++q) {
                double s = 0.0;
                for (int r = 0; r < d; ++r) s += hd[a * d + r] * fx[r * d + q];
                out[a * d + q] = s;
            }
    }

    void f(const StepContext&, int m, const double* v, const double* w, double* out) const override {
        const int d = c_.d, k = c_.k;
        const int kd = k * d;
        const double* fdx = fdx_.data() + static_cast<std::size_t>(m) * k * d;
        const double* fdy = fdy_.data() + static_cast<std::size_t>(m) * k * k;
        const double* fdz = fdz_.data() + static_cast<std::size_t>(m) * k * kd;
        const double* fx = fx_ + static_cast<std::size_t>(m) * d * d;
        for (int a = 0; a < k; ++a)
            for (int q = 0; q < d; ++q) {
                double s = 0.0;
                for (int r = 0; r < d; ++r) s += fdx[a * d + r] * fx[r * d + q];
                for (int b = 0; b < k; ++b) s += fdy[a * k + b] * v[b * d + q];
                for (int b = 0; b < k; ++b)
                    for (int j = 0; j < d; ++j)
                        s += fdz[a * kd + b * d + j] * w[(b * d + q) * d + j];
                out[a * d + q] = s;
            }
    }

    void g(const StepContext&, int m, const double* v, const double* w, double* out) const override {
        const int d = c_.d, k = c_.k, l = c_.l;
        const int kd = k * d;
        const double* gdx = gdx_.data() + static_cast<std::size_t>(m) * k * l * d;
        const double* gdy = gdy_.data() + static_cast<std::size_t>(m) * k * l * k;
        const double* gdz = gdz_.data() + static_cast<std::size_t>(m) * k * l * kd;
        const double* fx = fx_ + static_cast<std::size_t>(m) * d * d;
        for (int a = 0; a < k; ++a)
            for (int q = 0; q < d; ++q)
                for (int c = 0; c < l; ++c) {
                    double s = 0.0;
                    for (int r = 0; r < d; ++r) s += gdx[(a * l + c) * d + r] * fx[r * d + q];
                    for (int b = 0; b < k; ++b) s += gdy[(a * l + c) * k + b] * v[b * d + q];
                    for (int b = 0; b < k; ++b)
                        for (int j = 0; j < d; ++j)
                            s += gdz[(a * l + c) * kd + b * d + j] * w[(b * d + q) * d + j];
                    out[(a * d + q) * l + c] = s;
                }
    }

private:
    static void mul_cols(const double* g, const double* r, double* out, int M, int d) {
        parallel_for(M, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t m = begin; m < end; ++m) {
                const double* gm = g + m * d * d;
                const double* rm = r + m * d * d;
                double* om = out + m * d * d;
                for (int a = 0; a < d; ++a)
                    for (int q = 0; q < d; ++q) {
                        double s = 0.0;
                        for (int c = 0; c < d; ++c) s += gm[a * d + c] * rm[c * d + q];
                        om[a * d + q] = s;
                    }
            }
        });
    }

    const CoefficientSet& c_;
    const ForwardSolution& fwd_;
    const BDSDESolution& base_;
    const MalliavinDX* dx_;
    const double* fx_ = nullptr;
    const double* fxN_ptr_ = nullptr;
    std::vector<double> by_, bz_, fx_store_, fxN_;
    std::vector<double> fdx_, fdy_, fdz_, gdx_, gdy_, gdz_;
};

void require_layer_inputs(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BDSDESolution& base) {
    coeffs.validate(true);
    if (!forward.has_flow()) throw std::invalid_argument("variational solve: tangent_flow has not run");
    if (base.forward != &forward)
        throw std::invalid_argument("variational solve: base solution was computed on a different forward run");
}

} // namespace

VariationalSolution solve_variational(const CoefficientSet& coeffs, const ForwardSolution& forward,
                                      const BrownianBundle& bundle, const BackwardBFunctional& bback,
                                      const BDSDESolution& base, const RegressionSpec& reg) {
    require_layer_inputs(coeffs, forward, base);
    LinearDriver driver(coeffs, forward, base, nullptr);
    BackwardOptions opt;
    opt.reg = reg;
    VariationalSolution v;
    v.back = backward_sweep(driver, forward, bundle, bback, opt);
    v.forward = &forward;
    v.theta = -1;
    return v;
}

VariationalSolution solve_malliavin_D(const CoefficientSet& coeffs, const ForwardSolution& forward,
                                      const BrownianBundle& bundle, const BackwardBFunctional& bback,
                                      const BDSDESolution& base, int theta_index, const RegressionSpec& reg) {
    require_layer_inputs(coeffs, forward, base);
    MalliavinDX dx = malliavin_DX(forward, theta_index, coeffs);
    LinearDriver driver(coeffs, forward, base, &dx);
    BackwardOptions opt;
    opt.reg = reg;
    opt.first_node = theta_index;
    VariationalSolution v;
    v.back = backward_sweep(driver, forward, bundle, bback, opt);
    v.forward = &forward;
    v.theta = theta_index;
    return v;
}

IdentityReport identity_checks(const VariationalSolution& var, const ForwardSolution& forward,
                               const BDSDESolution& base) {
    if (var.forward != &forward || base.forward != &forward)
        throw std::invalid_argument("identity_checks: layers come from different forward runs");
    const int M = forward.n_paths();
    const int d = forward.dim();
    const int k = base.k();
    const int N = base.n_steps();
    const auto& ok = forward.path_ok();

    IdentityReport rep;
    for (auto flag : ok)
        if (!flag) ++rep.skipped_paths;

    std::vector<double> zbuf(static_cast<std::size_t>(M) * k * d);
    std::vector<double> vbuf(static_cast<std::size_t>(M) * k * d);

    if (var.theta < 0) {
        double acc[2] = {0.0, 0.0};
        double node_acc[2];
        for (int i = 0; i < N; ++i) {
            base.z_col(i, zbuf.data());
            var.grady_col(i, vbuf.data());
            const double* gi = forward.gradx_inv_col(i);
            const double* xc = forward.x_col(i);
            parallel_reduce(M, 2, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
                std::vector<double> sg(static_cast<std::size_t>(d) * d), t(static_cast<std::size_t>(d) * d);
                for (std::int64_t m = begin; m < end; ++m) {
                    if (!ok[m]) continue;
                    forward.sigma_at(xc + m * d, sg.data());
                    const double* gim = gi + m * d * d;
                    for (int a = 0; a < d; ++a)
                        for (int q = 0; q < d; ++q) {
                            double s = 0.0;
                            for (int c = 0; c < d; ++c) s += gim[a * d + c] * sg[c * d + q];
                            t[a * d + q] = s;
                        }
                    for (int a = 0; a < k; ++a)
                        for (int q = 0; q < d; ++q) {
                            double prod = 0.0;
                            for (int c = 0; c < d; ++c) prod += vbuf[m * k * d + a * d + c] * t[c * d + q];
                            const double r = zbuf[m * k * d + a * d + q] - prod;
                            p[0] += r * r;
                            p[1] += 1.0;
                        }
                }
            }, node_acc);
            acc[0] += node_acc[0];
            acc[1] += node_acc[1];
        }
        rep.has_eq_product = true;
        rep.rms_eq_product = acc[1] > 0 ? std::sqrt(acc[0] / acc[1]) : 0.0;

        base.z_col(0, zbuf.data());
        var.grady_col(0, vbuf.data());
        const double* x0 = forward.x_col(0);
        double acc0[2] = {0.0, 0.0};
        parallel_reduce(M, 2, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
            std::vector<double> sg(static_cast<std::size_t>(d) * d);
            for (std::int64_t m = begin; m < end; ++m) {
                if (!ok[m]) continue;
                forward.sigma_at(x0 + m * d, sg.data());
                for (int a = 0; a < k; ++a)
                    for (int q = 0; q < d; ++q) {
                        double prod = 0.0;
                        for (int c = 0; c < d; ++c) prod += vbuf[m * k * d + a * d + c] * sg[c * d + q];
                        const double r = zbuf[m * k * d + a * d + q] - prod;
                        p[0] += r * r;
                        p[1] += 1.0;
                    }
            }
        }, acc0);
        rep.has_z0 = true;
        rep.rms_z0 = acc0[1] > 0 ? std::sqrt(acc0[0] / acc0[1]) : 0.0;
        return rep;
    }

    const int s = var.theta;
    base.z_col(s, zbuf.data());
    var.grady_col(s, vbuf.data());
    double accd[2] = {0.0, 0.0};
    parallel_reduce(M, 2, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
        for (std::int64_t m = begin; m < end; ++m) {
            if (!ok[m]) continue;
            for (int q = 0; q < k * d; ++q) {
                const double r = vbuf[m * k * d + q] - zbuf[m * k * d + q];
                p[0] += r * r;
                p[1] += 1.0;
            }
        }
    }, accd);
    rep.has_diag = true;
    rep.rms_diag = accd[1] > 0 ? std::sqrt(accd[0] / accd[1]) : 0.0;
    return rep;
}

double malliavin_norm(const BDSDESolution& base, const std::vector<const VariationalSolution*>& layers,
                      int s_index) {
    const ForwardSolution& fwd = *base.forward;
    const int M = fwd.n_paths();
    const int k = base.k();
    const int d = fwd.dim();
    const TimeGrid& grid = base.back.grid;
    if (s_index < 0 || s_index > grid.n_steps) throw std::out_of_range("malliavin_norm: node out of range");

    std::vector<double> buf(static_cast<std::size_t>(M) * k * d);
    base.y_col(s_index, buf.data());
    double ey2 = 0.0;
    parallel_reduce(M, 1, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
        for (std::int64_t q = begin * k; q < end * k; ++q) p[0] += buf[q] * buf[q];
    }, &ey2);
    double norm2 = ey2 / M;

    std::vector<const VariationalSolution*> sorted(layers);
    std::sort(sorted.begin(), sorted.end(),
              [](const VariationalSolution* a, const VariationalSolution* b) { return a->theta < b->theta; });
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        const VariationalSolution* layer = sorted[j];
        if (layer->theta < 0) throw std::invalid_argument("malliavin_norm: gradient layer passed as a D layer");
        if (layer->theta > s_index) continue;
        const double t_here = grid.node(layer->theta);
        const double t_next = (j + 1 < sorted.size() && sorted[j + 1]->theta <= s_index)
                                  ? grid.node(sorted[j + 1]->theta)
                                  : grid.node(s_index);
        const double w = t_next - t_here;
        if (!(w > 0.0)) continue;
        layer->grady_col(s_index, buf.data());
        double ed2 = 0.0;
        parallel_reduce(M, 1, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
            for (std::int64_t q = begin * k * d; q < end * k * d; ++q) p[0] += buf[q] * buf[q];
        }, &ed2);
        norm2 += w * ed2 / M;
    }
    return norm2;
}

GradientCheckReport fd_gradient_check(const CoefficientSet& coeffs, const BrownianBundle& bundle,
                                      const BackwardBFunctional& bback, const std::vector<double>& x,
                                      double eps, const RegressionSpec& reg) {
    coeffs.validate(true);
    if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient_check: eps must be positive");
    if (x.size() != static_cast<std::size_t>(coeffs.d))
        throw std::invalid_argument("fd_gradient_check: x must have d entries");
    const int d = coeffs.d, k = coeffs.k;

    ForwardSolution fwd = euler_forward(coeffs, x, bundle);
    tangent_flow(coeffs, fwd, bundle);
    BDSDESolution base = solve_bdsde(coeffs, fwd, bundle, bback, reg);
    VariationalSolution var = solve_variational(coeffs, fwd, bundle, bback, base, reg);

    GradientCheckReport rep;
    rep.grad_y0 = var.back.y0;
    rep.fd_forward.assign(static_cast<std::size_t>(k) * d, 0.0);
    rep.fd_central.assign(static_cast<std::size_t>(k) * d, 0.0);

    for (int q = 0; q < d; ++q) {
        std::vector<double> xp(x), xm(x);
        xp[q] += eps;
        xm[q] -= eps;
        ForwardSolution fp = euler_forward(coeffs, xp, bundle);
        BDSDESolution sp = solve_bdsde(coeffs, fp, bundle, bback, reg);
        ForwardSolution fm = euler_forward(coeffs, xm, bundle);
        BDSDESolution sm = solve_bdsde(coeffs, fm, bundle, bback, reg);
        for (int a = 0; a < k; ++a) {
            rep.fd_forward[a * d + q] = (sp.back.y0[a] - base.back.y0[a]) / eps;
            rep.fd_central[a * d + q] = (sp.back.y0[a] - sm.back.y0[a]) / (2.0 * eps);
        }
    }
    for (int q = 0; q < k * d; ++q) {
        rep.max_abs_err_forward = std::max(rep.max_abs_err_forward, std::fabs(rep.fd_forward[q] - rep.grad_y0[q]));
        rep.max_abs_err_central = std::max(rep.max_abs_err_central, std::fabs(rep.fd_central[q] - rep.grad_y0[q]));
    }
    return rep;
}

} // namespace bdsde
