#pragma once

#include "bdsde/brownian.hpp"
#include "bdsde/forward.hpp"
#include "bdsde/regression.hpp"

#include <string>
#include <vector>

namespace bdsde {

// One backward time step, seen by a driver. Pointers stay valid for the
// duration of the step; per-path arrays are M-major.
struct StepContext {
    int i = 0;           // left node of the step [tau_i, tau_{i+1}]
    double dt = 0.0;
    const double* e_right = nullptr; // l, backward functional at tau_{i+1}
    const double* db = nullptr;      // l, increment dB_i
    const double* x_left = nullptr;  // M×d
    const double* x_right = nullptr; // M×d
};

// Problem plugged into the generic backward sweep. The same engine solves the
// nonlinear BDSDE and the linear variational / Malliavin-D systems, so all
// layers share one discretization bias structure.
class BackwardDriver {
public:
    virtual ~BackwardDriver() = default;
    virtual int y_width() const = 0; // k of the system being solved
    virtual bool f_depends_on_y() const { return true; }
    virtual bool has_terminal_z() const { return false; }
    virtual void begin_step(const StepContext& ctx) { (void)ctx; }
    virtual void terminal_y(int m, const double* x, double* out) const = 0;
    virtual void terminal_z(int m, const double* x, double* out) const { (void)m, (void)x, (void)out; }
    // driver f(e_{i+1}, X_{i+1}, y, Z_{i+1}) for path m; y is the inner
    // fixed-point argument, z has width y_width×d
    virtual void f(const StepContext& ctx, int m, const double* y, const double* z, double* out) const = 0;
    // driver g(e_{i+1}, X_{i+1}, Y_{i+1}, Z_{i+1}) for path m, out y_width×l
    virtual void g(const StepContext& ctx, int m, const double* y, const double* z, double* out) const = 0;
};

struct BackwardOptions {
    RegressionSpec reg;
    int picard_inner = 2;        // inner fixed-point fits for the implicit y argument
    bool include_gdb_in_z = true; // keep the g·dB term inside the Z payoff
    bool z_control_variate = true;
    bool z_second_pass = true; // refit Z after subtracting ẑ(X)(dW dWᵀ − dt I)/dt
    int first_node = 0; // sweep stops here; fields before it are exact zeros (suffix solves)
};

// Z_{tau_i} = (1/dt) Ê[(Y_{i+1} + g(θ_{i+1})·dB_i) dW_iᵀ | X_i]
// Y_{tau_i} = Ê[Y_{i+1} + f(θ̃_i) dt + g(θ_{i+1})·dB_i | X_i]
// with Ê a cross-sectional regression on X_i. Per-path values are the fitted
// fields evaluated along the paths; node N keeps the exact terminal values.
struct BackwardResult {
    TimeGrid grid;
    int k = 1, d = 1, zw = 1;
    std::vector<RegressionField> y_field; // N+1 entries (node N fitted for variance control)
    std::vector<RegressionField> z_field; // N entries
    std::vector<double> y_terminal;       // M×k, exact
    std::vector<double> z_terminal;       // M×zw (zeros unless the driver supplies a layer)
    std::vector<double> y0, y0_se;        // k, estimate at tau_0 and MC standard error
    std::vector<std::string> warnings;

    void y_col(const ForwardSolution& fwd, int i, double* out) const; // M×k
    void z_col(const ForwardSolution& fwd, int i, double* out) const; // M×zw
};

BackwardResult backward_sweep(BackwardDriver& driver, const ForwardSolution& fwd,
                              const BrownianBundle& bundle, const BackwardBFunctional& bback,
                              const BackwardOptions& opt);

} // namespace bdsde
