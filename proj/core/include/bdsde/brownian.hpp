#pragma once

#include "bdsde/rng.hpp"
#include "bdsde/time_grid.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace bdsde {

// Endpoint convention for backward Ito sums. Right is the project-wide
// default; left is kept only as a sensitivity knob.
enum class QuadratureEndpoint { right, left };

// Discretized drivers: W increments (per path, forward filtration) and one
// shared B increment path (backward filtration). dW is not stored: each
// increment is a pure function of (seed_w, path, step, component), which is
// what makes bundles cheap at any M and bit-stable under threading. When the
// bundle is a coarsening of a finer generation grid (sub_steps_w/b > 1),
// increments are block sums over the fine grid, so coarse paths are exact
// restrictions of fine ones.
struct BrownianBundle {
    TimeGrid grid;
    int M = 0, d = 1, l = 1;
    std::uint64_t seed_w = 0, seed_b = 0;
    int sub_steps_w = 1, sub_steps_b = 1;
    int gen_offset_w = 0, gen_offset_b = 0; // start offset on the generation grid, in fine steps
    std::vector<double> dB;                 // N×l, materialized once and shared
    bool from_file = false;
    std::vector<double> dW_file;            // M×N×d, only for bundles loaded from a dump

    std::uint64_t stream_id(int m) const { return rng_stream(RngDomain::forward_w, static_cast<std::uint64_t>(m)); }

    double dw(int m, int i, int j) const {
        if (from_file)
            return dW_file[(static_cast<std::size_t>(m) * grid.n_steps + i) * d + j];
        const double sdt = std::sqrt(grid.dt() / sub_steps_w);
        const std::uint64_t stream = stream_id(m);
        double acc = 0.0;
        for (int q = 0; q < sub_steps_w; ++q) {
            const std::uint64_t step = static_cast<std::uint64_t>(gen_offset_w) +
                                       static_cast<std::uint64_t>(i) * sub_steps_w + q;
            acc += sdt * normal_at(seed_w, stream, step, j);
        }
        return acc;
    }

    // fills out[m*d + j] for all paths at step i
    void dw_column(int i, double* out) const;

    double db(int i, int c) const { return dB[static_cast<std::size_t>(i) * l + c]; }
};

// Single-seed form: the backward-driver seed is derived deterministically.
BrownianBundle gen_bundle(std::uint64_t seed, const TimeGrid& grid, int M, int d, int l);

// Two-seed form with optional coupling to finer reference grids: ref_n_w /
// ref_n_b are step counts of the generation grids (multiples of grid.n_steps;
// equal to it by default). gen_offset_* positions a suffix grid inside the
// generation grid so a probe started mid-horizon sees the same realization.
BrownianBundle gen_bundle(std::uint64_t seed_w, std::uint64_t seed_b, const TimeGrid& grid,
                          int M, int d, int l,
                          int ref_n_w = 0, int ref_n_b = 0,
                          int gen_offset_w = 0, int gen_offset_b = 0);

// Restriction of a bundle to the suffix grid [tau_i0, T]: the dB rows are
// sliced (same realization), and generated dW draws are re-keyed through the
// generation offset so each path's increments on [tau_i0, T] are unchanged.
BrownianBundle suffix_bundle(const BrownianBundle& bundle, int i0);

// weight phi evaluated on nodes against the shared B path:
// values[i] = sum_{j>=i} phi(tau_{j+1}) ∘ dB_j (componentwise), values[N] = 0
struct BackwardBFunctional {
    TimeGrid grid;
    int l = 1;
    std::vector<double> values; // (N+1)×l

    const double* at(int i) const { return values.data() + static_cast<std::size_t>(i) * l; }
};

using PhiFn = std::function<void(double t, double* out_l)>;

BackwardBFunctional backward_B(const BrownianBundle& bundle, const PhiFn& phi,
                               QuadratureEndpoint ep = QuadratureEndpoint::right);

// sum_{j=i0}^{i1-1} integrand[j+1]·dB_j with integrand per-node k×l matrices
// (right endpoint; left endpoint uses integrand[j])
std::vector<double> backward_ito_sum(const std::vector<double>& integrand, int k,
                                     const BrownianBundle& bundle, int i0, int i1,
                                     QuadratureEndpoint ep = QuadratureEndpoint::right);

// Brownian-bridge refinement of one increment sequence (N×l on grid) into
// factor× finer increments whose block sums reproduce the input exactly.
// Used by convergence oracles; draws are keyed by (seed, stream, fine step).
std::vector<double> bridge_refine(const std::vector<double>& increments, const TimeGrid& grid, int l,
                                  int factor, std::uint64_t seed, std::uint64_t stream = 0);

// block sums: inverse of refinement
std::vector<double> coarsen_increments(const std::vector<double>& fine, int n_coarse, int factor, int l);

} // namespace bdsde
