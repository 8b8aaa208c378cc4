#pragma once

#include "bdsde/brownian.hpp"
#include "bdsde/coefficients.hpp"

#include <cstdint>
#include <vector>

namespace bdsde {

// 1-D spatial mesh with two ghost nodes: x_j = x_min + j*dx for j = 0..J+1,
// interior j = 1..J.
struct SpaceGrid {
    double x_min = -1.0;
    double x_max = 1.0;
    int J = 3; // interior point count

    double dx() const { return (x_max - x_min) / (J + 1); }
    double node(int j) const { return x_min + j * dx(); }
    int n_nodes() const { return J + 2; }
    void validate() const;
};

enum class SpdeScheme {
    explicit_euler, // CFL-limited, generator at level i+1
    theta_implicit, // theta = 1/2 on the generator only, f and g stay explicit
};

// Pathwise-in-B solution field on the space-time mesh. Ghost node values
// freeze the second difference across the edge (u_xxx = 0 extrapolation),
// u_0 = 3u_1 - 3u_2 + u_3 and mirrored on the right. Derivative rows are
// derived from u by fixed stencils: ux central on interior and one-sided at
// the edges, uxx second difference on interior and zero at the edges.
// Recomputing them from u reproduces them bit-for-bit.
struct RandomFieldU {
    TimeGrid grid;
    SpaceGrid space;
    std::vector<double> u, ux, uxx; // (N+1) x (J+2), row-major
    std::uint64_t b_seed = 0;

    const double* row(int i) const { return u.data() + static_cast<std::size_t>(i) * space.n_nodes(); }
    const double* ux_row(int i) const { return ux.data() + static_cast<std::size_t>(i) * space.n_nodes(); }
    const double* uxx_row(int i) const { return uxx.data() + static_cast<std::size_t>(i) * space.n_nodes(); }

    // linear interpolation in x, clamped to the mesh
    double value(int i, double x) const;
    double value_ux(int i, double x) const;
};

// Lu = 1/2 sigma(x_j)^2 (u_{j+1}-2u_j+u_{j-1})/dx^2 + b(x_j)(u_{j+1}-u_{j-1})/(2dx)
// on interior nodes; edge entries are zero.
void generator_apply(const double* u_row, const SpaceGrid& space, const CoefficientSet& coeffs, double* out);
std::vector<double> generator_apply(const std::vector<double>& u_row, const SpaceGrid& space,
                                    const CoefficientSet& coeffs);

// Backward recursion from u[N] = h:
//   u[i] = u[i+1] + [Lu + f(e_{i+1}, x, u[i+1], sigma*ux[i+1])] dt
//        + g(e_{i+1}, x, u[i+1], sigma*ux[i+1]) . dB_i
// with the generator either explicit at i+1 or theta-averaged via a
// tridiagonal solve. Requires d = k = 1 and l in {1,2}; explicit scheme
// rejects grids with dt > dx^2 / max_j sigma(x_j)^2 and names the required dt.
RandomFieldU solve_spde(const CoefficientSet& coeffs, const BrownianBundle& bundle,
                        const BackwardBFunctional& bback, const SpaceGrid& space, SpdeScheme scheme);

} // namespace bdsde
