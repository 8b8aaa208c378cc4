#include "bdsde/brownian.hpp"
#include "bdsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bdsde {

void BrownianBundle::dw_column(int i, double* out) const {
    const int dd = d;
    parallel_for(M, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t m = b; m < e; ++m)
            for (int j = 0; j < dd; ++j) out[m * dd + j] = dw(static_cast<int>(m), i, j);
    });
}

BrownianBundle gen_bundle(std::uint64_t seed, const TimeGrid& grid, int M, int d, int l) {
    return gen_bundle(seed, derive_seed(seed, 0xB5EED), grid, M, d, l);
}

BrownianBundle gen_bundle(std::uint64_t seed_w, std::uint64_t seed_b, const TimeGrid& grid,
                          int M, int d, int l,
                          int ref_n_w, int ref_n_b,
                          int gen_offset_w, int gen_offset_b) {
    if (M < 1) throw std::invalid_argument("gen_bundle: M must be >= 1");
    if (d < 1) throw std::invalid_argument("gen_bundle: d must be >= 1");
    if (l < 1) throw std::invalid_argument("gen_bundle: l must be >= 1");
    if (ref_n_w == 0) ref_n_w = grid.n_steps;
    if (ref_n_b == 0) ref_n_b = grid.n_steps;
    if (ref_n_w % grid.n_steps != 0)
        throw std::invalid_argument("gen_bundle: ref_n_w must be a multiple of grid.n_steps");
    if (ref_n_b % grid.n_steps != 0)
        throw std::invalid_argument("gen_bundle: ref_n_b must be a multiple of grid.n_steps");

    BrownianBundle bundle;
    bundle.grid = grid;
    bundle.M = M;
    bundle.d = d;
    bundle.l = l;
    bundle.seed_w = seed_w;
    bundle.seed_b = seed_b;
    bundle.sub_steps_w = ref_n_w / grid.n_steps;
    bundle.sub_steps_b = ref_n_b / grid.n_steps;
    bundle.gen_offset_w = gen_offset_w;
    bundle.gen_offset_b = gen_offset_b;

    // the single shared B realization, aggregated from the generation grid
    const int N = grid.n_steps;
    const int rb = bundle.sub_steps_b;
    const double sdt = std::sqrt(grid.dt() / rb);
    const std::uint64_t stream = rng_stream(RngDomain::backward_b, 0);
    bundle.dB.assign(static_cast<std::size_t>(N) * l, 0.0);
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < l; ++c) {
            double acc = 0.0;
            for (int q = 0; q < rb; ++q) {
                const std::uint64_t step = static_cast<std::uint64_t>(gen_offset_b) +
                                           static_cast<std::uint64_t>(i) * rb + q;
                acc += sdt * normal_at(seed_b, stream, step, c);
            }
            bundle.dB[static_cast<std::size_t>(i) * l + c] = acc;
        }
    return bundle;
}

BrownianBundle suffix_bundle(const BrownianBundle& bundle, int i0) {
    if (i0 < 0 || i0 >= bundle.grid.n_steps) throw std::invalid_argument("suffix_bundle: index out of range");
    BrownianBundle out = bundle;
    out.grid = bundle.grid.suffix(i0);
    const int N = out.grid.n_steps;
    out.dB.assign(bundle.dB.begin() + static_cast<std::size_t>(i0) * bundle.l, bundle.dB.end());
    if (bundle.from_file) {
        out.dW_file.resize(static_cast<std::size_t>(bundle.M) * N * bundle.d);
        for (int m = 0; m < bundle.M; ++m)
            std::copy_n(bundle.dW_file.begin() +
                            (static_cast<std::size_t>(m) * bundle.grid.n_steps + i0) * bundle.d,
                        static_cast<std::size_t>(N) * bundle.d,
                        out.dW_file.begin() + static_cast<std::size_t>(m) * N * bundle.d);
    } else {
        out.gen_offset_w = bundle.gen_offset_w + i0 * bundle.sub_steps_w;
        out.gen_offset_b = bundle.gen_offset_b + i0 * bundle.sub_steps_b;
    }
    return out;
}

BackwardBFunctional backward_B(const BrownianBundle& bundle, const PhiFn& phi, QuadratureEndpoint ep) {
    const int N = bundle.grid.n_steps;
    const int l = bundle.l;
    BackwardBFunctional eb;
    eb.grid = bundle.grid;
    eb.l = l;
    eb.values.assign(static_cast<std::size_t>(N + 1) * l, 0.0);
    std::vector<double> w(l);
    for (int i = N - 1; i >= 0; --i) {
        const double t = ep == QuadratureEndpoint::right ? bundle.grid.node(i + 1) : bundle.grid.node(i);
        phi(t, w.data());
        for (int c = 0; c < l; ++c)
            eb.values[static_cast<std::size_t>(i) * l + c] =
                eb.values[static_cast<std::size_t>(i + 1) * l + c] + w[c] * bundle.db(i, c);
    }
    return eb;
}

std::vector<double> backward_ito_sum(const std::vector<double>& integrand, int k,
                                     const BrownianBundle& bundle, int i0, int i1,
                                     QuadratureEndpoint ep) {
    const int N = bundle.grid.n_steps;
    const int l = bundle.l;
    if (i0 > i1 || i0 < 0 || i1 > N)
        throw std::invalid_argument("backward_ito_sum: node range [i0,i1] out of bounds");
    if (integrand.size() != static_cast<std::size_t>(N + 1) * k * l)
        throw std::invalid_argument("backward_ito_sum: integrand must hold (N+1) k×l values");
    std::vector<double> out(k, 0.0);
    for (int j = i0; j < i1; ++j) {
        const int node = ep == QuadratureEndpoint::right ? j + 1 : j;
        const double* A = integrand.data() + static_cast<std::size_t>(node) * k * l;
        for (int a = 0; a < k; ++a) {
            double acc = 0.0;
            for (int c = 0; c < l; ++c) acc += A[a * l + c] * bundle.db(j, c);
            out[a] += acc;
        }
    }
    return out;
}

std::vector<double> bridge_refine(const std::vector<double>& increments, const TimeGrid& grid, int l,
                                  int factor, std::uint64_t seed, std::uint64_t stream) {
    if (factor < 1) throw std::invalid_argument("bridge_refine: factor must be >= 1");
    const int N = grid.n_steps;
    if (increments.size() != static_cast<std::size_t>(N) * l)
        throw std::invalid_argument("bridge_refine: increments must hold N×l values");
    if (factor == 1) return increments;
    std::vector<double> fine(static_cast<std::size_t>(N) * factor * l);
    const double dt = grid.dt();
    const double dtf = dt / factor;
    const std::uint64_t s = rng_stream(RngDomain::bridge, stream);
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < l; ++c) {
            double remaining = increments[static_cast<std::size_t>(i) * l + c];
            double len = dt;
            for (int q = 0; q < factor - 1; ++q) {
                const std::uint64_t step = static_cast<std::uint64_t>(i) * factor + q;
                const double z = normal_at(seed, s, step, c);
                const double mean = remaining * dtf / len;
                const double var = dtf * (len - dtf) / len;
                const double inc = mean + std::sqrt(var) * z;
                fine[(static_cast<std::size_t>(i) * factor + q) * l + c] = inc;
                remaining -= inc;
                len -= dtf;
            }
            // the last sub-increment is the remainder, so block sums are exact
            fine[(static_cast<std::size_t>(i) * factor + factor - 1) * l + c] = remaining;
        }
    return fine;
}

std::vector<double> coarsen_increments(const std::vector<double>& fine, int n_coarse, int factor, int l) {
    if (fine.size() != static_cast<std::size_t>(n_coarse) * factor * l)
        throw std::invalid_argument("coarsen_increments: size mismatch with n_coarse×factor×l");
    std::vector<double> coarse(static_cast<std::size_t>(n_coarse) * l, 0.0);
    for (int i = 0; i < n_coarse; ++i)
        for (int q = 0; q < factor; ++q)
            for (int c = 0; c < l; ++c)
                coarse[static_cast<std::size_t>(i) * l + c] +=
                    fine[(static_cast<std::size_t>(i) * factor + q) * l + c];
    return coarse;
}

} // namespace bdsde
