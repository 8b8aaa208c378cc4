#pragma once

#include "bdsde/backward_engine.hpp"
#include "bdsde/coefficients.hpp"

namespace bdsde {

// Y/Z regression fields over the grid plus per-path views reconstructed from
// them. The forward solution is borrowed and must outlive this object.
struct BDSDESolution {
    BackwardResult back;
    const ForwardSolution* forward = nullptr;

    double y0() const { return back.y0[0]; }
    double y0_se() const { return back.y0_se[0]; }
    int k() const { return back.k; }
    int n_steps() const { return back.grid.n_steps; }
    void y_col(int i, double* out) const { back.y_col(*forward, i, out); } // M×k
    void z_col(int i, double* out) const { back.z_col(*forward, i, out); } // M×k×d
};

BDSDESolution solve_bdsde(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const RegressionSpec& reg);
BDSDESolution solve_bdsde(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const BackwardOptions& opt);

// Picard iteration re-enacting the existence argument: each sweep solves the
// linear problem with (Y, Z) frozen at the previous iterate, starting from
// (0, 0). The trace holds sup-node RMS Y-distances between successive solves
// (the gap to the arbitrary zero start is not part of the trace).
struct PicardResult {
    BDSDESolution solution;
    std::vector<double> distances;
    int solves = 0;
    bool converged = false;
};

PicardResult picard_solve(const CoefficientSet& coeffs, const ForwardSolution& forward,
                          const BrownianBundle& bundle, const BackwardBFunctional& bback,
                          const RegressionSpec& reg, double tol, int max_iter);

} // namespace bdsde
