#ifndef OSCNET_PLL_LINEAR_HPP
#define OSCNET_PLL_LINEAR_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/phase.hpp"
#include "oscnet/trace.hpp"

namespace oscnet {

// Charge-pump loop constants and design targets for the type-2,
// 3rd-order PLL. k_pd follows the charge-pump convention I_CP / 2pi.
struct LoopParams {
    double k_vco = 3e6;              // Hz per volt
    double i_cp = 1.34e-6;           // amperes
    int divider_n = 1;
    double target_phase_margin = 74.0;          // degrees
    double target_crossover = two_pi * 27e3;    // rad/s

    double k_pd() const { return i_cp / two_pi; }
    // Combined PD*VCO gain with the VCO slope in angular units.
    double forward_gain() const { return k_pd() * two_pi * k_vco; }

    void validate() const {
        if (!(k_vco > 0.0 && i_cp > 0.0 && divider_n > 0 &&
              target_crossover > 0.0 && target_phase_margin > 0.0))
            throw config_error("loop params must all be positive");
    }
};

// Series R-C1 branch shunted by C2; the unique passive filter giving
// one zero at 1/(R C1) and one pole at (C1+C2)/(R C1 C2).
struct LoopFilter {
    double r = 0.0;   // ohms
    double c1 = 0.0;  // farads
    double c2 = 0.0;  // farads

    double omega_z() const { return 1.0 / (r * c1); }
    double omega_p() const { return (c1 + c2) / (r * c1 * c2); }

    void validate() const {
        if (!(r > 0.0 && c1 > 0.0 && c2 > 0.0))
            throw config_error("loop filter components must be positive");
    }
};

struct FrequencyResponse {
    std::vector<double> frequencies;  // rad/s, ascending
    std::vector<double> gain_db;
    std::vector<double> phase_deg;
};

// Filter transimpedance Z(s) = (1 + s/wz) / (s (C1+C2) (1 + s/wp)).
inline std::complex<double> filter_impedance(const LoopFilter& f,
                                             std::complex<double> s) {
    const double ct = f.c1 + f.c2;
    return (1.0 + s / f.omega_z()) / (s * ct * (1.0 + s / f.omega_p()));
}

// Open-loop gain G(s) = K_PD * (2pi K_VCO) * Z(s) / (s N).
inline std::complex<double> open_loop_gain(const LoopFilter& f, const LoopParams& p,
                                           double omega) {
    const std::complex<double> s(0.0, omega);
    return p.forward_gain() * filter_impedance(f, s) / (s * double(p.divider_n));
}

// Maximum-phase-margin zero/pole placement around the target crossover:
// b = (1+sin pm)/(1-sin pm), wz = wc/sqrt(b), wp = wc*sqrt(b); the total
// capacitance then follows from |G(j wc)| = 1.
inline LoopFilter design_loop(const LoopParams& p) {
    p.validate();
    if (p.target_phase_margin >= 90.0)
        throw config_error("design_loop: phase margin must be < 90 degrees");
    const double pm = p.target_phase_margin * std::numbers::pi / 180.0;
    const double b = (1.0 + std::sin(pm)) / (1.0 - std::sin(pm));
    const double wc = p.target_crossover;
    const double wz = wc / std::sqrt(b);
    const double wp = wc * std::sqrt(b);

    const std::complex<double> jwc(0.0, wc);
    const double num = std::abs(1.0 + jwc / wz);
    const double den = std::abs(1.0 + jwc / wp);
    const double c_total =
        p.forward_gain() * num / (wc * wc * double(p.divider_n) * den);

    LoopFilter f;
    f.c2 = c_total / b;
    f.c1 = c_total - f.c2;
    f.r = 1.0 / (wz * f.c1);
    f.validate();
    return f;
}

namespace detail {
// Open-loop phase mapped into the (-270, -90) band natural to a type-2
// loop with one zero and one extra pole.
inline double open_loop_phase_deg(const LoopFilter& f, const LoopParams& p,
                                  double omega) {
    double deg = std::arg(open_loop_gain(f, p, omega)) * 180.0 / std::numbers::pi;
    while (deg > -90.0) deg -= 360.0;
    while (deg <= -270.0) deg += 360.0;
    return deg;
}
} // namespace detail

inline FrequencyResponse open_loop_response(const LoopFilter& f, const LoopParams& p,
                                            const std::vector<double>& grid) {
    f.validate();
    FrequencyResponse r;
    double prev = 0.0;
    for (double w : grid) {
        if (w <= prev || w <= 0.0)
            throw config_error("open_loop_response: grid must be positive ascending");
        prev = w;
        r.frequencies.push_back(w);
        r.gain_db.push_back(20.0 * std::log10(std::abs(open_loop_gain(f, p, w))));
        r.phase_deg.push_back(detail::open_loop_phase_deg(f, p, w));
    }
    return r;
}

// Unity-gain crossover by bisection on the (monotone) gain magnitude
// over [wc/100, 100 wc].
inline double crossover_frequency(const LoopFilter& f, const LoopParams& p) {
    f.validate();
    double lo = p.target_crossover / 100.0;
    double hi = p.target_crossover * 100.0;
    if (std::abs(open_loop_gain(f, p, lo)) < 1.0 ||
        std::abs(open_loop_gain(f, p, hi)) > 1.0)
        throw numeric_error("phase_margin: no unity-gain crossover in bracket");
    while ((hi - lo) > 1e-9 * hi) {
        const double mid = std::sqrt(lo * hi);
        if (std::abs(open_loop_gain(f, p, mid)) > 1.0) lo = mid;
        else hi = mid;
    }
    return std::sqrt(lo * hi);
}

inline double phase_margin(const LoopFilter& f, const LoopParams& p) {
    const double wx = crossover_frequency(f, p);
    return 180.0 + detail::open_loop_phase_deg(f, p, wx);
}

// Closed-loop H(s) = G/(1+G) as the 3rd-order polynomial pair
//   num: (A/C2) s + (A wz / C2),  den: s^3 + wp s^2 + (A/C2) s + (A wz/C2)
// with A the combined forward gain. Unit phase step response via RK4 on
// the controllable canonical realization.
inline SimTrace closed_loop_step(const LoopFilter& f, const LoopParams& p,
                                 double dt, double t_end) {
    f.validate();
    p.validate();
    if (!(dt > 0.0) || dt > 1e-2 / f.omega_p())
        throw config_error("closed_loop_step: dt must satisfy dt <= 0.01/omega_p");
    const double a = p.forward_gain() / double(p.divider_n);
    const double b1 = a / f.c2;
    const double b0 = a * f.omega_z() / f.c2;
    const double a2 = f.omega_p();
    const double a1 = b1;
    const double a0 = b0;

    double x0 = 0.0, x1 = 0.0, x2 = 0.0; // phase variables, u = 1
    auto deriv = [&](double s0, double s1, double s2, double& d0, double& d1, double& d2) {
        d0 = s1;
        d1 = s2;
        d2 = -a0 * s0 - a1 * s1 - a2 * s2 + 1.0;
    };

    SimTrace trace;
    trace.labels = {"phi_out"};
    trace.columns.resize(1);
    auto output = [&] { return b0 * x0 + b1 * x1; };
    auto record = [&](double t) {
        trace.times.push_back(t);
        trace.columns[0].push_back(output());
    };
    record(0.0);

    const long n_steps = std::lround(t_end / dt);
    for (long step = 0; step < n_steps; ++step) {
        double k10, k11, k12, k20, k21, k22, k30, k31, k32, k40, k41, k42;
        deriv(x0, x1, x2, k10, k11, k12);
        deriv(x0 + 0.5 * dt * k10, x1 + 0.5 * dt * k11, x2 + 0.5 * dt * k12,
              k20, k21, k22);
        deriv(x0 + 0.5 * dt * k20, x1 + 0.5 * dt * k21, x2 + 0.5 * dt * k22,
              k30, k31, k32);
        deriv(x0 + dt * k30, x1 + dt * k31, x2 + dt * k32, k40, k41, k42);
        x0 += dt / 6.0 * (k10 + 2 * k20 + 2 * k30 + k40);
        x1 += dt / 6.0 * (k11 + 2 * k21 + 2 * k31 + k41);
        x2 += dt / 6.0 * (k12 + 2 * k22 + 2 * k32 + k42);
        record((step + 1) * dt);
        if (std::abs(output()) > 10.0)
            throw numeric_error("closed_loop_step: response exceeded 10x, unstable loop");
    }
    return trace;
}

// Margin versus C2 with the filter's impedance ratio held: C1 tracks C2
// at the designed C1/C2 ratio while R stays fixed. Scaling both
// capacitors moves the crossover off the phase peak in either
// direction, which is what produces the single-maximum curve; holding
// C1 fixed instead gives a monotone curve with no interior optimum.
struct CapacitancePoint {
    double c2 = 0.0;
    double margin_deg = 0.0;
    bool valid = false;
};

inline std::vector<CapacitancePoint>
capacitance_sweep(const LoopParams& p, const LoopFilter& base,
                  const std::vector<double>& c2_grid) {
    base.validate();
    const double ratio = base.c1 / base.c2;
    std::vector<CapacitancePoint> out;
    double prev = 0.0;
    for (double c2 : c2_grid) {
        if (c2 <= prev || c2 <= 0.0)
            throw config_error("capacitance_sweep: grid must be positive ascending");
        prev = c2;
        CapacitancePoint pt;
        pt.c2 = c2;
        LoopFilter f{base.r, ratio * c2, c2};
        try {
            pt.margin_deg = phase_margin(f, p);
            pt.valid = true;
        } catch (const numeric_error&) {
            pt.valid = false; // recorded as a gap
        }
        out.push_back(pt);
    }
    return out;
}

inline std::string design_report(const LoopParams& p, const LoopFilter& f) {
    std::ostringstream os;
    os.precision(6);
    os << "k_vco_hz_per_v: " << p.k_vco << '\n'
       << "i_cp_a: " << p.i_cp << '\n'
       << "divider_n: " << p.divider_n << '\n'
       << "target_phase_margin_deg: " << p.target_phase_margin << '\n'
       << "target_crossover_rad_s: " << p.target_crossover << '\n'
       << "r_ohm: " << f.r << '\n'
       << "c1_f: " << f.c1 << '\n'
       << "c2_f: " << f.c2 << '\n'
       << "omega_z_rad_s: " << f.omega_z() << '\n'
       << "omega_p_rad_s: " << f.omega_p() << '\n'
       << "achieved_phase_margin_deg: " << phase_margin(f, p) << '\n'
       << "crossover_rad_s: " << crossover_frequency(f, p) << '\n';
    return os.str();
}

} // namespace oscnet

#endif
