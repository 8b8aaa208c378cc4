#include "bdsde/bdsde_solver.hpp"
#include "bdsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

class BdsdeDriver : public BackwardDriver {
public:
    explicit BdsdeDriver(const CoefficientSet& c) : c_(c) {}

    int y_width() const override { return c_.k; }
    bool has_terminal_z() const override { return static_cast<bool>(c_.h_dx); }

    void terminal_y(int, const double* x, double* out) const override { c_.h(x, out); }

    void terminal_z(int, const double* x, double* out) const override {
        const int d = c_.d, k = c_.k;
        std::vector<double> hd(static_cast<std::size_t>(k) * d), sg(static_cast<std::size_t>(d) * d);
        c_.h_dx(x, hd.data());
        c_.sigma(x, sg.data());
        for (int a = 0; a < k; ++a)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int q = 0; q < d; ++q) s += hd[a * d + q] * sg[q * d + j];
                out[a * d + j] = s;
            }
    }

    void f(const StepContext& ctx, int m, const double* y, const double* z, double* out) const override {
        c_.fbar(ctx.e_right, ctx.x_right + static_cast<std::size_t>(m) * c_.d, y, z, out);
    }

    void g(const StepContext& ctx, int m, const double* y, const double* z, double* out) const override {
        c_.gbar(ctx.e_right, ctx.x_right + static_cast<std::size_t>(m) * c_.d, y, z, out);
    }

private:
    const CoefficientSet& c_;
};

// linear sweep with (y, z) arguments frozen at the previous Picard iterate
class FrozenDriver : public BackwardDriver {
public:
    FrozenDriver(const CoefficientSet& c, const ForwardSolution& fwd, const BackwardResult* prev)
        : c_(c), fwd_(fwd), prev_(prev),
          py_(static_cast<std::size_t>(fwd.n_paths()) * c.k, 0.0),
          pz_(static_cast<std::size_t>(fwd.n_paths()) * c.k * c.d, 0.0) {}

    int y_width() const override { return c_.k; }
    bool f_depends_on_y() const override { return false; }
    bool has_terminal_z() const override { return static_cast<bool>(c_.h_dx); }

    void begin_step(const StepContext& ctx) override {
        if (!prev_) return;
        prev_->y_col(fwd_, ctx.i + 1, py_.data());
        prev_->z_col(fwd_, ctx.i + 1, pz_.data());
    }

    void terminal_y(int, const double* x, double* out) const override { c_.h(x, out); }

    void terminal_z(int m, const double* x, double* out) const override {
        BdsdeDriver(c_).terminal_z(m, x, out);
    }

    void f(const StepContext& ctx, int m, const double*, const double*, double* out) const override {
        c_.fbar(ctx.e_right, ctx.x_right + static_cast<std::size_t>(m) * c_.d,
                py_.data() + static_cast<std::size_t>(m) * c_.k,
                pz_.data() + static_cast<std::size_t>(m) * c_.k * c_.d, out);
    }

    void g(const StepContext& ctx, int m, const double*, const double*, double* out) const override {
        c_.gbar(ctx.e_right, ctx.x_right + static_cast<std::size_t>(m) * c_.d,
                py_.data() + static_cast<std::size_t>(m) * c_.k,
                pz_.data() + static_cast<std::size_t>(m) * c_.k * c_.d, out);
    }

private:
    const CoefficientSet& c_;
    const ForwardSolution& fwd_;
    const BackwardResult* prev_;
    std::vector<double> py_, pz_;
};

// sup over nodes of the RMS over paths and components of the Y difference
double iterate_distance(const BackwardResult& a, const BackwardResult& b, const ForwardSolution& fwd) {
    const int N = a.grid.n_steps;
    const int M = fwd.n_paths();
    const int k = a.k;
    std::vector<double> ya(static_cast<std::size_t>(M) * k), yb(ya.size());
    double worst = 0.0;
    for (int i = 0; i <= N; ++i) {
        a.y_col(fwd, i, ya.data());
        b.y_col(fwd, i, yb.data());
        double acc = 0.0;
        parallel_reduce(M, 1, [&](std::int64_t, std::int64_t begin, std::int64_t end, double* p) {
            for (std::int64_t q = begin * k; q < end * k; ++q) {
                const double dd = ya[q] - yb[q];
                p[0] += dd * dd;
            }
        }, &acc);
        worst = std::max(worst, std::sqrt(acc / (static_cast<double>(M) * k)));
    }
    return worst;
}

} // namespace

BDSDESolution solve_bdsde(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const BackwardOptions& opt) {
    coeffs.validate(false);
    if (forward.dim() != coeffs.d) throw std::invalid_argument("solve_bdsde: forward dimension differs from coefficients");
    if (bundle.l != coeffs.l) throw std::invalid_argument("solve_bdsde: bundle l differs from coefficients");
    BdsdeDriver driver(coeffs);
    BDSDESolution sol;
    sol.back = backward_sweep(driver, forward, bundle, bback, opt);
    sol.forward = &forward;
    return sol;
}

BDSDESolution solve_bdsde(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const RegressionSpec& reg) {
    BackwardOptions opt;
    opt.reg = reg;
    return solve_bdsde(coeffs, forward, bundle, bback, opt);
}

PicardResult picard_solve(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const RegressionSpec& reg, double tol, int max_iter) {
    coeffs.validate(false);
    if (max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be >= 1");
    BackwardOptions opt;
    opt.reg = reg;

    PicardResult out;
    FrozenDriver first(coeffs, forward, nullptr);
    BackwardResult cur = backward_sweep(first, forward, bundle, bback, opt);
    out.solves = 1;
    while (out.solves < max_iter) {
        FrozenDriver step(coeffs, forward, &cur);
        BackwardResult next = backward_sweep(step, forward, bundle, bback, opt);
        ++out.solves;
        const double dist = iterate_distance(cur, next, forward);
        out.distances.push_back(dist);
        cur = std::move(next);
        if (dist < tol) {
            out.converged = true;
            break;
        }
    }
    out.solution.back = std::move(cur);
    out.solution.forward = &forward;
    return out;
}

} // namespace bdsde
