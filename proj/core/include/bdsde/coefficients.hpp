#pragma once

#include <functional>
#include <string>
#include <vector>

namespace bdsde {

// Problem datum (b, sigma, fbar, gbar, h, phi) with analytic first
// derivatives. All arrays are flat row-major doubles; index orders:
//   sigma      d×d        [a*d + j]            = sigma_{aj}
//   b_dx       d×d        [a*d + m]            = d b_a / d x_m
//   sigma_dx   d×d×d      [(a*d + j)*d + m]    = d sigma_{aj} / d x_m
//   fbar       k          fbar_dx  k×d         fbar_dy  k×k
//   fbar_dz    k×(k×d)    [a*k*d + b*d + c]    = d f_a / d z_{bc}
//   gbar       k×l        [a*l + be]
//   gbar_dx    (k×l)×d    [(a*l + be)*d + m]
//   gbar_dy    (k×l)×k    [(a*l + be)*k + b]
//   gbar_dz    (k×l)×(k×d)[((a*l + be)*k + b)*d + c]
//   h          k          h_dx     k×d
struct CoefficientSet {
    int d = 1, k = 1, l = 1;

    std::function<void(const double* x, double* out)> b;
    std::function<void(const double* x, double* out)> sigma;
    std::function<void(const double* x, double* out)> b_dx;
    std::function<void(const double* x, double* out)> sigma_dx;

    using Driver = std::function<void(const double* e, const double* x, const double* y,
                                      const double* z, double* out)>;
    Driver fbar, gbar;
    Driver fbar_dx, fbar_dy, fbar_dz;
    Driver gbar_dx, gbar_dy, gbar_dz;

    std::function<void(const double* x, double* out)> h;
    std::function<void(const double* x, double* out)> h_dx;
    std::function<void(double t, double* out)> phi;

    // declared (H1)/(H2) constants, checked by check_assumptions
    double declared_c = 1.0;
    double declared_alpha = 0.0;
    double declared_C = 1.0;

    // throws std::invalid_argument naming the first missing piece; `need`
    // widens the check to the derivative oracles the malliavin module uses
    void validate(bool need_derivatives) const;
};

} // namespace bdsde
