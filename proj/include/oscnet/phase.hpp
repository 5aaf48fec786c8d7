#ifndef OSCNET_PHASE_HPP
#define OSCNET_PHASE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "oscnet/errors.hpp"

namespace oscnet {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Unwrapped phases, one entry per oscillator, radians.
using PhaseVector = std::vector<double>;

/// Map an angle to [-pi, pi). The boundary +pi maps to -pi.
inline double wrap_phase(double theta) {
    if (!std::isfinite(theta))
        throw std::domain_error("wrap_phase: non-finite input");
    double w = std::remainder(theta, two_pi); // (-pi, pi]
    if (w >= std::numbers::pi) w -= two_pi;
    return w;
}

} // namespace oscnet

#endif
