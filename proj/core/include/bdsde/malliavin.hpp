#pragma once

#include "bdsde/bdsde_solver.hpp"

namespace bdsde {

// Solution of the linear variational system around a frozen base solution.
// For the x-derivative layer the unknowns are gradY (k×d) with gradZ
// (k×d per derivative direction); for a Malliavin layer they are D_thetaY /
// D_thetaZ with the same widths and exact zeros before theta.
struct VariationalSolution {
    BackwardResult back;
    const ForwardSolution* forward = nullptr;
    int theta = -1; // node index of a D layer, -1 for the gradient layer

    int kd() const { return back.k; }
    void grady_col(int i, double* out) const { back.y_col(*forward, i, out); } // M×(k·d)
    void gradz_col(int i, double* out) const { back.z_col(*forward, i, out); } // M×(k·d·d)
};

// gradY gets terminal h'(X_T)·gradX_T and the drivers
// F = f'_x·gradX + f'_y·gradY + f'_z·gradZ, G likewise from g', all primes
// frozen at the base solution arguments.
VariationalSolution solve_variational(const CoefficientSet& coeffs, const ForwardSolution& forward,
                                      const BrownianBundle& bundle, const BackwardBFunctional& bback,
                                      const BDSDESolution& base, const RegressionSpec& reg);

// Same linear system forced through D_thetaX instead of gradX, solved on the
// suffix grid [theta, T]; values before theta are zero by convention.
VariationalSolution solve_malliavin_D(const CoefficientSet& coeffs, const ForwardSolution& forward,
                                      const BrownianBundle& bundle, const BackwardBFunctional& bback,
                                      const BDSDESolution& base, int theta_index, const RegressionSpec& reg);

struct IdentityReport {
    // Z_i vs gradY_i (gradX_i)^{-1} sigma(X_i), RMS over paths and nodes
    bool has_eq_product = false;
    double rms_eq_product = 0.0;
    // Z_0 vs gradY_0 sigma(x) at the start node
    bool has_z0 = false;
    double rms_z0 = 0.0;
    // D_sY_s vs Z_s at s = theta (Malliavin layers only)
    bool has_diag = false;
    double rms_diag = 0.0;
    int skipped_paths = 0; // flagged by the tangent flow
};

IdentityReport identity_checks(const VariationalSolution& var, const ForwardSolution& forward,
                               const BDSDESolution& base);

// quadrature approximation of the 1,2-norm squared of Y at node s_index:
// E|Y_s|^2 + sum over theta layers of weight · E‖D_thetaY_s‖^2
double malliavin_norm(const BDSDESolution& base, const std::vector<const VariationalSolution*>& layers,
                      int s_index = 0);

struct GradientCheckReport {
    std::vector<double> grad_y0;    // k×d from the variational solve
    std::vector<double> fd_forward; // one-sided difference quotients
    std::vector<double> fd_central;
    double max_abs_err_forward = 0.0, max_abs_err_central = 0.0;
};

// reruns the solver from shifted starts on the same bundle and compares
// difference quotients of Y_0 with the variational gradient
GradientCheckReport fd_gradient_check(const CoefficientSet& coeffs, const BrownianBundle& bundle,
                                      const BackwardBFunctional& bback, const std::vector<double>& x,
                                      double eps, const RegressionSpec& reg);

} // namespace bdsde
