#pragma once

#include "bdsde/bdsde_solver.hpp"
#include "bdsde/coefficients.hpp"

#include <string>
#include <vector>

namespace bdsde {

struct DomainBox {
    std::vector<double> x_lo, x_hi; // d
    std::vector<double> y_lo, y_hi; // k
    std::vector<double> z_lo, z_hi; // k×d
    std::vector<double> e_lo, e_hi; // l

    static DomainBox cube(const CoefficientSet& coeffs, double radius);
};

// Sampled estimates of the constants the coefficient set declares, with
// violations reported as entries rather than errors.
//   c_f_hat:   max |Δf|² / (|Δy|² + ‖Δz‖²) over sampled pairs
//   c_g_y_hat: max ‖Δg‖² / |Δy|² over pairs differing in y only
//   alpha_hat: max ‖Δg‖² / ‖Δz‖² over pairs differing in z only
//   h2_min_eig: min over samples of λ_min(zz* + C·I − gg*)
//   h3_margin:  min over samples and directions θ of
//               λ_min(θθ* − (ḡ'_z:θ)(ḡ'_z:θ)*), the scalar case reduces to
//               1 − (ḡ'_z)² exactly
//   h3_sigma_max: largest singular value of the flattened z-Jacobian of ḡ
struct AssumptionReport {
    double c_f_hat = 0.0;
    double c_g_y_hat = 0.0;
    double alpha_hat = 0.0;
    double h2_min_eig = 0.0;
    double h3_margin = 0.0;
    double h3_sigma_max = 0.0;
    double declared_c = 0.0, declared_alpha = 0.0, declared_C = 0.0;
    bool h1_ok = false, h2_ok = false, h3_ok = false;
    std::vector<std::string> violations;
};

AssumptionReport check_assumptions(const CoefficientSet& coeffs, int sample_count, const DomainBox& box,
                                   std::uint64_t seed = 0);

// Empirical moment bounds of solutions started from the points in x_values
// (one solution per point, d = 1): E sup_i |Y_i|^p and E (Σ‖Z_i‖² dt)^{p/2},
// plus the fitted growth exponent of the sup-Y moment in log(1+|x|).
struct MomentReport {
    int p = 2;
    std::vector<double> x_values;
    std::vector<double> sup_y_moment;
    std::vector<double> z_energy_moment;
    double q_hat = 0.0;
    bool all_finite = true;
};

MomentReport moment_diagnostics(const std::vector<BDSDESolution>& solutions, int p,
                                const std::vector<double>& x_values);

} // namespace bdsde
