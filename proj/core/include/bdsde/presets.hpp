#pragma once

#include "bdsde/coefficients.hpp"

#include <map>
#include <string>
#include <vector>

namespace bdsde {

// Named coefficient families used by scenario files. Arbitrary coefficient
// sets are a library-level feature only: a config file cannot carry analytic
// derivatives, so scenarios select a preset plus numeric parameters.
//
//   heat-quadratic        b=0, sigma=1, fbar=gbar=0, h=x^2
//   ou-linear             b=-x, sigma=1, fbar=gbar=0, h=x
//   additive-noise        b=0, sigma=1, fbar=0, gbar=gamma (const), h=cos x
//   nonlinear-f-exp-decay b=0, sigma=1, fbar=-rate*y, gbar=0, h=1
//   contracting-g         b=0, sigma=1, fbar=0, gbar=slope*z, h=x^2
//   random-coeff-sine     b=-0.5x, sigma=1, phi=phi_amp,
//                         fbar=f_sin_amp*sin(x+e) - f_y_coef*y + f_z_amp*sin(z),
//                         gbar=g_sin_amp*sin(y+e), h=x^2
// All presets are d=k=l=1.
CoefficientSet make_preset(const std::string& name, const std::map<std::string, double>& params = {});

std::vector<std::string> preset_names();

// default parameter values of a preset; unknown name throws
std::map<std::string, double> preset_defaults(const std::string& name);

} // namespace bdsde
