#pragma once

#include <stdexcept>

namespace bdsde {

// Uniform grid t0 = tau_0 < ... < tau_N = T. Nodes are computed from the
// endpoints (never accumulated), so tau_0 and tau_N carry no rounding drift.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t0_, double T_, int n) : t0(t0_), T(T_), n_steps(n) {
        if (!(T > t0)) throw std::invalid_argument("TimeGrid: requires T > t0");
        if (n < 1) throw std::invalid_argument("TimeGrid: requires n_steps >= 1");
    }

    double dt() const { return (T - t0) / n_steps; }

    double node(int i) const {
        if (i < 0 || i > n_steps) throw std::invalid_argument("TimeGrid::node: index out of range");
        if (i == 0) return t0;
        if (i == n_steps) return T;
        return t0 + dt() * i;
    }

    // restriction to [tau_i0, T], used when a probe starts mid-horizon
    TimeGrid suffix(int i0) const {
        if (i0 < 0 || i0 >= n_steps) throw std::invalid_argument("TimeGrid::suffix: index out of range");
        return TimeGrid(node(i0), T, n_steps - i0);
    }

    bool operator==(const TimeGrid&) const = default;
};

} // namespace bdsde
