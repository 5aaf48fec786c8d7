#ifndef OSCNET_TYPES_HPP
#define OSCNET_TYPES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/phase.hpp"

namespace oscnet {

// Per-oscillator constants. Frequencies are angular (rad/s) internally;
// the config layer converts from Hz at the boundary.
struct OscillatorParams {
    double natural_frequency = 0.0;        // rad/s, omega_i
    double center_frequency_offset = 0.0;  // rad/s, models r_var programming
    double vco_gain = 3e6;                 // Hz per volt (K_VCO)
    bool enabled = true;

    // Any finite frequency is legal at this level (rotating frames use
    // zero or negative omega); the behavioral VCO adds positivity.
    void validate() const {
        if (!std::isfinite(natural_frequency) || !std::isfinite(center_frequency_offset))
            throw config_error("oscillator natural frequency must be finite");
        if (!(vco_gain > 0.0))
            throw config_error("oscillator vco gain must be > 0");
    }
};

enum class Normalization { GlobalN, InDegree };

struct CouplingConfig {
    double strength = 0.0;   // rad/s (K)
    double delay = 0.0;      // seconds (tau)
    double phase_lag = 0.0;  // radians (alpha), Sakaguchi term
    Normalization normalization = Normalization::GlobalN;

    void validate() const {
        if (strength < 0.0) throw config_error("coupling strength must be >= 0");
        if (delay < 0.0) throw config_error("coupling delay must be >= 0");
        if (phase_lag < 0.0 || phase_lag > std::numbers::pi / 2)
            throw config_error("phase lag must be in [0, pi/2]");
    }
};

} // namespace oscnet

#endif
