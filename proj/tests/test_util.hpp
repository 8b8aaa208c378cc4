#pragma once

#include "bdsde/coefficients.hpp"

#include <string>

// minimal valid scalar problem datum; tests override individual members
inline bdsde::CoefficientSet blank_scalar() {
    bdsde::CoefficientSet c;
    c.d = c.k = c.l = 1;
    auto zero1 = [](const double*, double* out) { out[0] = 0.0; };
    auto dzero = [](const double*, const double*, const double*, const double*, double* out) { out[0] = 0.0; };
    c.b = zero1;
    c.sigma = [](const double*, double* out) { out[0] = 1.0; };
    c.b_dx = zero1;
    c.sigma_dx = zero1;
    c.fbar = dzero;
    c.gbar = dzero;
    c.fbar_dx = dzero;
    c.fbar_dy = dzero;
    c.fbar_dz = dzero;
    c.gbar_dx = dzero;
    c.gbar_dy = dzero;
    c.gbar_dz = dzero;
    c.h = zero1;
    c.h_dx = zero1;
    c.phi = [](double, double* out) { out[0] = 0.0; };
    c.declared_alpha = 0.5;
    c.declared_c = 1.0;
    c.declared_C = 2.0;
    return c;
}

inline std::string scenario_path(const std::string& name) {
    return std::string(BDSDE_SOURCE_DIR) + "/scenarios/" + name + ".toml";
}
