#include "bdsde/presets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

void zero1(const double*, double* out) { out[0] = 0.0; }
void one1(const double*, double* out) { out[0] = 1.0; }

using P = std::map<std::string, double>;

double take(P& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    const double v = it->second;
    p.erase(it);
    return v;
}

// shared scalar-problem scaffold: b=0, sigma=1, every driver derivative 0
CoefficientSet scalar_base() {
    CoefficientSet c;
    c.d = c.k = c.l = 1;
    c.b = zero1;
    c.sigma = one1;
    c.b_dx = zero1;
    c.sigma_dx = zero1;
    auto dzero = [](const double*, const double*, const double*, const double*, double* out) { out[0] = 0.0; };
    c.fbar = dzero;
    c.gbar = dzero;
    c.fbar_dx = dzero;
    c.fbar_dy = dzero;
    c.fbar_dz = dzero;
    c.gbar_dx = dzero;
    c.gbar_dy = dzero;
    c.gbar_dz = dzero;
    c.phi = [](double, double* out) { out[0] = 0.0; };
    c.declared_c = 1.0;
    c.declared_alpha = 0.5;
    c.declared_C = 2.0;
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"heat-quadratic", "ou-linear",      "additive-noise",
            "nonlinear-f-exp-decay", "contracting-g", "random-coeff-sine"};
}

std::map<std::string, double> preset_defaults(const std::string& name) {
    if (name == "heat-quadratic" || name == "ou-linear") return {};
    if (name == "additive-noise") return {{"gamma", 0.4}};
    if (name == "nonlinear-f-exp-decay") return {{"rate", 1.0}};
    if (name == "contracting-g") return {{"slope", 0.5}};
    if (name == "random-coeff-sine")
        return {{"phi_amp", 0.5}, {"f_sin_amp", 0.5}, {"f_y_coef", 0.5}, {"f_z_amp", 0.3}, {"g_sin_amp", 0.3}};
    throw std::invalid_argument("unknown preset: " + name);
}

CoefficientSet make_preset(const std::string& name, const std::map<std::string, double>& params) {
    P p = params;
    CoefficientSet c = scalar_base();

    if (name == "heat-quadratic") {
        c.h = [](const double* x, double* out) { out[0] = x[0] * x[0]; };
        c.h_dx = [](const double* x, double* out) { out[0] = 2.0 * x[0]; };
    } else if (name == "ou-linear") {
        c.b = [](const double* x, double* out) { out[0] = -x[0]; };
        c.b_dx = [](const double*, double* out) { out[0] = -1.0; };
        c.h = [](const double* x, double* out) { out[0] = x[0]; };
        c.h_dx = [](const double*, double* out) { out[0] = 1.0; };
    } else if (name == "additive-noise") {
        const double gamma = take(p, "gamma", 0.4);
        c.gbar = [gamma](const double*, const double*, const double*, const double*, double* out) {
            out[0] = gamma;
        };
        c.h = [](const double* x, double* out) { out[0] = std::cos(x[0]); };
        c.h_dx = [](const double* x, double* out) { out[0] = -std::sin(x[0]); };
    } else if (name == "nonlinear-f-exp-decay") {
        const double rate = take(p, "rate", 1.0);
        c.fbar = [rate](const double*, const double*, const double* y, const double*, double* out) {
            out[0] = -rate * y[0];
        };
        c.fbar_dy = [rate](const double*, const double*, const double*, const double*, double* out) {
            out[0] = -rate;
        };
        c.h = [](const double*, double* out) { out[0] = 1.0; };
        c.h_dx = zero1;
        c.declared_c = std::max(rate * rate, 1e-3);
    } else if (name == "contracting-g") {
        const double slope = take(p, "slope", 0.5);
        c.gbar = [slope](const double*, const double*, const double*, const double* z, double* out) {
            out[0] = slope * z[0];
        };
        c.gbar_dz = [slope](const double*, const double*, const double*, const double*, double* out) {
            out[0] = slope;
        };
        c.h = [](const double* x, double* out) { out[0] = x[0] * x[0]; };
        c.h_dx = [](const double* x, double* out) { out[0] = 2.0 * x[0]; };
        // declared values are claims, deliberately clamped into the legal
        // range so check_assumptions (not construction) catches bad slopes
        c.declared_alpha = std::clamp(slope * slope, 0.05, 0.9);
        c.declared_C = 2.0;
    } else if (name == "random-coeff-sine") {
        const double phi_amp = take(p, "phi_amp", 0.5);
        const double af = take(p, "f_sin_amp", 0.5);
        const double by = take(p, "f_y_coef", 0.5);
        const double cz = take(p, "f_z_amp", 0.3);
        const double ag = take(p, "g_sin_amp", 0.3);
        c.b = [](const double* x, double* out) { out[0] = -0.5 * x[0]; };
        c.b_dx = [](const double*, double* out) { out[0] = -0.5; };
        c.phi = [phi_amp](double, double* out) { out[0] = phi_amp; };
        c.fbar = [af, by, cz](const double* e, const double* x, const double* y, const double* z, double* out) {
            out[0] = af * std::sin(x[0] + e[0]) - by * y[0] + cz * std::sin(z[0]);
        };
        c.fbar_dx = [af](const double* e, const double* x, const double*, const double*, double* out) {
            out[0] = af * std::cos(x[0] + e[0]);
        };
        c.fbar_dy = [by](const double*, const double*, const double*, const double*, double* out) {
            out[0] = -by;
        };
        c.fbar_dz = [cz](const double*, const double*, const double*, const double* z, double* out) {
            out[0] = cz * std::cos(z[0]);
        };
        c.gbar = [ag](const double* e, const double*, const double* y, const double*, double* out) {
            out[0] = ag * std::sin(y[0] + e[0]);
        };
        c.gbar_dy = [ag](const double* e, const double*, const double* y, const double*, double* out) {
            out[0] = ag * std::cos(y[0] + e[0]);
        };
        c.h = [](const double* x, double* out) { out[0] = x[0] * x[0]; };
        c.h_dx = [](const double* x, double* out) { out[0] = 2.0 * x[0]; };
        c.declared_c = std::max(1e-3, 2.0 * std::max(by * by, cz * cz));
        c.declared_alpha = 0.1;
        c.declared_C = std::max(2.0, 2.0 * ag * ag);
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }

    if (!p.empty()) throw std::invalid_argument("preset " + name + ": unknown parameter '" + p.begin()->first + "'");
    c.validate(true);
    return c;
}

} // namespace bdsde
