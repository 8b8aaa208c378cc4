#include "bdsde/coefficients.hpp"

#include <stdexcept>

namespace bdsde {

void CoefficientSet::validate(bool need_derivatives) const {
    if (d < 1) throw std::invalid_argument("CoefficientSet: d must be >= 1");
    if (k < 1) throw std::invalid_argument("CoefficientSet: k must be >= 1");
    if (l < 1) throw std::invalid_argument("CoefficientSet: l must be >= 1");
    auto require = [](bool present, const char* name) {
        if (!present) throw std::invalid_argument(std::string("CoefficientSet: missing ") + name);
    };
    require(static_cast<bool>(b), "b");
    require(static_cast<bool>(sigma), "sigma");
    require(static_cast<bool>(fbar), "fbar");
    require(static_cast<bool>(gbar), "gbar");
    require(static_cast<bool>(h), "h");
    require(static_cast<bool>(phi), "phi");
    if (need_derivatives) {
        require(static_cast<bool>(b_dx), "b_dx");
        require(static_cast<bool>(sigma_dx), "sigma_dx");
        require(static_cast<bool>(fbar_dx), "fbar_dx");
        require(static_cast<bool>(fbar_dy), "fbar_dy");
        require(static_cast<bool>(fbar_dz), "fbar_dz");
        require(static_cast<bool>(gbar_dx), "gbar_dx");
        require(static_cast<bool>(gbar_dy), "gbar_dy");
        require(static_cast<bool>(gbar_dz), "gbar_dz");
        require(static_cast<bool>(h_dx), "h_dx");
    }
    if (!(declared_alpha > 0.0 && declared_alpha < 1.0))
        throw std::invalid_argument("CoefficientSet: declared_alpha must lie in (0,1)");
    if (!(declared_c > 0.0)) throw std::invalid_argument("CoefficientSet: declared_c must be > 0");
}

} // namespace bdsde
