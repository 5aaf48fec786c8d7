#ifndef OSCNET_PLL_BEHAVIORAL_HPP
#define OSCNET_PLL_BEHAVIORAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/phase.hpp"
#include "oscnet/pll_linear.hpp"
#include "oscnet/topology.hpp"
#include "oscnet/trace.hpp"
#include "oscnet/types.hpp"

namespace oscnet {

enum class CouplingScheme { Uncoupled, CS1, CS2 };
enum class ComparatorMode { LeadLagPulse, Xor };

// One PLL's mutable state inside a behavioral run.
struct PllState {
    double vco_phase = 0.0;  // radians, unwrapped
    double v_c1 = 0.0;       // series-branch capacitor voltage
    double v_ctrl = 0.0;     // control node (C2 voltage), clamped to rails
    int cs2_counter = 0;     // 3-bit mux counter
    bool out = false;        // current binary VCO output
};

// Square-wave VCO advance: phase grows at omega0 + 2pi*K_VCO*v_ctrl and
// the output is high through the first half of each period.
inline void vco_step(PllState& st, double omega0, double kvco_hz_per_v, double dt) {
    st.vco_phase += (omega0 + two_pi * kvco_hz_per_v * st.v_ctrl) * dt;
    const double pos = st.vco_phase - two_pi * std::floor(st.vco_phase / two_pi);
    st.out = pos < std::numbers::pi;
}

enum class CompareSign { Aligned, Lead, Lag };

// Sampled three-state phase/frequency comparator for one (peer, self)
// pair. A peer edge arriving first raises the lead (UP) pulse until the
// own edge closes it; the mirror case raises the lag (DOWN) pulse.
// `sign` remembers the outcome of the most recent completed comparison.
class PairComparator {
  public:
    void step(bool peer_edge, bool own_edge, bool peer_level = false,
              bool own_level = false) {
        levels_differ_ = peer_level != own_level;
        if (peer_edge && own_edge) {
            if (state_ != 0) sign_ = CompareSign::Aligned;
            state_ = 0;
            return;
        }
        if (peer_edge) {
            if (state_ == -1) { state_ = 0; sign_ = CompareSign::Lag; }
            else state_ = 1;
        } else if (own_edge) {
            if (state_ == 1) { state_ = 0; sign_ = CompareSign::Lead; }
            else state_ = -1;
        }
    }

    bool lead_pulse() const { return state_ == 1; }
    bool lag_pulse() const { return state_ == -1; }

    bool up_active(ComparatorMode m) const {
        return m == ComparatorMode::LeadLagPulse
                   ? lead_pulse()
                   : (levels_differ_ && sign_ == CompareSign::Lead);
    }
    bool down_active(ComparatorMode m) const {
        return m == ComparatorMode::LeadLagPulse
                   ? lag_pulse()
                   : (levels_differ_ && sign_ == CompareSign::Lag);
    }

    CompareSign sign() const { return sign_; }
    void reset() { state_ = 0; sign_ = CompareSign::Aligned; levels_differ_ = false; }

  private:
    int state_ = 0;  // 0 idle, +1 lead pulse, -1 lag pulse
    CompareSign sign_ = CompareSign::Aligned;
    bool levels_differ_ = false;
};

// Offline comparison of two sampled square waves; returns the final
// sign and the accumulated pulse time (seconds) on the winning side.
struct ComparisonSummary {
    CompareSign sign = CompareSign::Aligned;
    double overlap = 0.0;
};

inline ComparisonSummary compare_phases(const std::vector<uint8_t>& peer,
                                        const std::vector<uint8_t>& own, double dt) {
    if (peer.size() != own.size())
        throw config_error("compare_phases: signals must share the sample grid");
    PairComparator cmp;
    double lead_time = 0.0, lag_time = 0.0;
    for (std::size_t i = 1; i < peer.size(); ++i) {
        cmp.step(peer[i] && !peer[i - 1], own[i] && !own[i - 1], peer[i], own[i]);
        if (cmp.lead_pulse()) lead_time += dt;
        if (cmp.lag_pulse()) lag_time += dt;
    }
    ComparisonSummary s;
    s.sign = cmp.sign();
    s.overlap = (s.sign == CompareSign::Lead)   ? lead_time
                : (s.sign == CompareSign::Lag) ? lag_time
                                               : 0.0;
    return s;
}

// CS-1 gate logic over one PLL's peer comparators: the accelerate (UP)
// path asserts only while every peer whose last comparison said "lead"
// currently holds its lead pulse high (false when no peer leads); the
// slow-down (DOWN) path is the OR of all lag pulses. Both high -> zero
// net current.
inline double cs1_pump_current(const std::vector<PairComparator>& comparators,
                               double i_cp,
                               ComparatorMode mode = ComparatorMode::LeadLagPulse) {
    bool any_lead = false, all_lead_active = true, down = false;
    for (const auto& c : comparators) {
        if (c.sign() == CompareSign::Lead) {
            any_lead = true;
            all_lead_active = all_lead_active && c.up_active(mode);
        }
        down = down || c.down_active(mode);
    }
    const bool up = any_lead && all_lead_active;
    return i_cp * ((up ? 1.0 : 0.0) - (down ? 1.0 : 0.0));
}

// CS-2 mux selection: the 3-bit counter indexes the enabled peer list
// modulo its length.
inline int cs2_select(const PllState& st, const std::vector<int>& enabled_peers) {
    if (enabled_peers.empty()) return -1;
    return enabled_peers[static_cast<std::size_t>(st.cs2_counter) %
                         enabled_peers.size()];
}

// Trapezoidal discretization of the R-C1 series branch shunted by C2,
// driven by a step-constant current source. The scheme conserves charge
// exactly: C1*dv1 + C2*dv2 = i*dt per unclamped step.
struct FilterDiscretization {
    // x' = m[..] x + bd * i with x = (v_c1, v_ctrl)
    double m00, m01, m10, m11, bd0, bd1;

    FilterDiscretization(const LoopFilter& f, double dt) {
        f.validate();
        const double a00 = -1.0 / (f.r * f.c1), a01 = 1.0 / (f.r * f.c1);
        const double a10 = 1.0 / (f.r * f.c2), a11 = -1.0 / (f.r * f.c2);
        const double h = dt / 2.0;
        // (I - hA)^{-1}
        const double p00 = 1.0 - h * a00, p01 = -h * a01;
        const double p10 = -h * a10, p11 = 1.0 - h * a11;
        const double det = p00 * p11 - p01 * p10;
        const double q00 = p11 / det, q01 = -p01 / det;
        const double q10 = -p10 / det, q11 = p00 / det;
        // (I + hA)
        const double r00 = 1.0 + h * a00, r01 = h * a01;
        const double r10 = h * a10, r11 = 1.0 + h * a11;
        m00 = q00 * r00 + q01 * r10;
        m01 = q00 * r01 + q01 * r11;
        m10 = q10 * r00 + q11 * r10;
        m11 = q10 * r01 + q11 * r11;
        // input column: dt * B with B = (0, 1/C2), mapped through the inverse
        bd0 = q01 * dt / f.c2;
        bd1 = q11 * dt / f.c2;
    }
};

inline void filter_step(PllState& st, double i_pump, const FilterDiscretization& d,
                        double v_supply) {
    const double v1 = d.m00 * st.v_c1 + d.m01 * st.v_ctrl + d.bd0 * i_pump;
    const double v2 = d.m10 * st.v_c1 + d.m11 * st.v_ctrl + d.bd1 * i_pump;
    if (v2 < 0.0 || v2 > v_supply) {
        st.v_ctrl = std::clamp(v2, 0.0, v_supply); // anti-windup: v_c1 frozen
        return;
    }
    st.v_c1 = v1;
    st.v_ctrl = v2;
}

inline void filter_step(PllState& st, double i_pump, const LoopFilter& f, double dt,
                        double v_supply = 1.0) {
    filter_step(st, i_pump, FilterDiscretization(f, dt), v_supply);
}

struct BehavioralConfig {
    Topology topology;
    std::vector<OscillatorParams> params;
    LoopFilter filter;
    double i_cp = 1.34e-6;
    CouplingScheme scheme = CouplingScheme::Uncoupled;
    int edges_per_advance = 1;  // CS-2 counter rate, in VCO rising edges
    ComparatorMode comparator = ComparatorMode::LeadLagPulse;
    double delay_tau = 0.0;     // seconds, quantized to a dt multiple
    double dt = 1e-9;
    double v_supply = 1.0;
    double t_end = 0.0;
    double reference_frequency = 0.0;  // rad/s; 0 disables the reference input
    PhaseVector initial_phases;        // empty -> all zero
    double initial_v_ctrl = -1.0;      // negative -> v_supply/2
    int sample_every = 1;
    bool record_outputs = false;       // add binary out_* columns to the trace

    int size() const { return topology.size(); }

    void validate() const {
        if (static_cast<int>(params.size()) != topology.size())
            throw config_error("behavioral: params/topology size mismatch");
        for (const auto& p : params) p.validate();
        if (!(dt > 0.0) || !(t_end > 0.0))
            throw config_error("behavioral: dt and t_end must be > 0");
        double omega_max = 0.0;
        for (const auto& p : params) {
            if (!(p.natural_frequency + p.center_frequency_offset > 0.0))
                throw config_error("behavioral: VCO frequency must be > 0");
            omega_max = std::max(omega_max, p.natural_frequency +
                                                p.center_frequency_offset);
        }
        if (reference_frequency > 0.0)
            omega_max = std::max(omega_max, reference_frequency);
        if (dt > (two_pi / omega_max) / 64.0 * (1.0 + 1e-12))
            throw config_error("behavioral: dt must be <= VCO period / 64");
        if (delay_tau < 0.0) throw config_error("behavioral: delay must be >= 0");
        if (edges_per_advance < 1)
            throw config_error("behavioral: edges_per_advance must be >= 1");
        if (v_supply <= 0.0) throw config_error("behavioral: v_supply must be > 0");
        filter.validate();
    }
};

// Quantize the coupling delay to a whole number of samples. The delay
// sits on each PLL's exported output only; its own feedback path stays
// undelayed.
inline BehavioralConfig set_delay(BehavioralConfig config, double tau) {
    if (tau < 0.0) throw config_error("set_delay: tau must be >= 0");
    const long len = std::lround(tau / config.dt);
    if (len > (1L << 22))
        throw config_error("set_delay: tau exceeds the delay-line capacity");
    config.delay_tau = static_cast<double>(len) * config.dt;
    return config;
}

struct BehavioralResult {
    SimTrace trace;                     // vctrl_*, phase_* (+ out_* on request)
    std::vector<double> rail_fraction;  // share of steps pinned at a rail
    std::vector<double> pump_duty;      // share of steps with nonzero current
    std::vector<double> mean_frequency; // rad/s over the final third
    bool non_lock = false;              // any v_ctrl railed > 50% of the run
};

// Deterministic fixed-step network simulation. Within a step every PLL
// reads only previous-step outputs (double buffered), so the update
// order of PLLs cannot affect the result.
inline BehavioralResult run_behavioral(const BehavioralConfig& config) {
    config.validate();
    const int n = config.size();
    const double dt = config.dt;
    const long delay_len = std::lround(config.delay_tau / dt);
    const long n_steps = std::lround(config.t_end / dt);

    std::vector<PllState> st(n);
    std::vector<double> omega0(n);
    for (int j = 0; j < n; ++j) {
        const auto& p = config.params[j];
        st[j].v_ctrl = config.initial_v_ctrl >= 0.0 ? config.initial_v_ctrl
                                                    : config.v_supply / 2.0;
        st[j].v_c1 = st[j].v_ctrl;
        st[j].vco_phase = config.initial_phases.empty() ? 0.0
                                                        : config.initial_phases.at(j);
        omega0[j] = p.natural_frequency + p.center_frequency_offset -
                    two_pi * p.vco_gain * config.v_supply / 2.0;
        const double pos = st[j].vco_phase -
                           two_pi * std::floor(st[j].vco_phase / two_pi);
        st[j].out = pos < std::numbers::pi;
    }

    FilterDiscretization disc(config.filter, dt);

    // Per-PLL delay line over its exported output.
    std::vector<std::vector<uint8_t>> delay_line(
        n, std::vector<uint8_t>(static_cast<std::size_t>(delay_len) + 1, 0));
    std::vector<std::size_t> head(n, 0);
    for (int j = 0; j < n; ++j)
        for (auto& v : delay_line[j]) v = st[j].out ? 1 : 0;

    // Enabled peer lists and one comparator per (target, peer) pair.
    std::vector<std::vector<int>> peers(n);
    for (int j = 0; j < n; ++j)
        for (const auto& [src, w] : in_neighbors(config.topology, config.params, j))
            peers[j].push_back(src);
    std::vector<std::vector<PairComparator>> cmp(n);
    for (int j = 0; j < n; ++j) cmp[j].resize(peers[j].size());
    std::vector<PairComparator> ref_cmp(n);
    std::vector<int> edges_seen(n, 0);

    std::vector<uint8_t> exported_prev(n), own_prev(n);
    for (int j = 0; j < n; ++j) {
        exported_prev[j] = delay_line[j][head[j]];
        own_prev[j] = st[j].out ? 1 : 0;
    }
    bool ref_prev = true;
    double ref_phase = 0.0;

    SimTrace trace;
    for (int j = 0; j < n; ++j) trace.labels.push_back("vctrl_" + std::to_string(j));
    for (int j = 0; j < n; ++j) trace.labels.push_back("phase_" + std::to_string(j));
    if (config.record_outputs)
        for (int j = 0; j < n; ++j) trace.labels.push_back("out_" + std::to_string(j));
    trace.columns.assign(trace.labels.size(), {});
    auto record = [&](double t) {
        trace.times.push_back(t);
        for (int j = 0; j < n; ++j) trace.columns[j].push_back(st[j].v_ctrl);
        for (int j = 0; j < n; ++j) trace.columns[n + j].push_back(st[j].vco_phase);
        if (config.record_outputs)
            for (int j = 0; j < n; ++j)
                trace.columns[2 * n + j].push_back(st[j].out ? 1.0 : 0.0);
    };
    record(0.0);

    std::vector<long> railed(n, 0), pumping(n, 0);
    std::vector<uint8_t> exported_now(n), own_now(n);

    for (long step = 0; step < n_steps; ++step) {
        // Current outputs (own undelayed, exported delayed) and edges.
        for (int j = 0; j < n; ++j) {
            exported_now[j] = delay_line[j][head[j]];
            own_now[j] = st[j].out ? 1 : 0;
        }
        const bool ref_now = config.reference_frequency > 0.0 &&
                             (ref_phase - two_pi * std::floor(ref_phase / two_pi)) <
                                 std::numbers::pi;
        const bool ref_edge = ref_now && !ref_prev;

        for (int j = 0; j < n; ++j) {
            const bool own_edge = own_now[j] && !own_prev[j];
            for (std::size_t q = 0; q < peers[j].size(); ++q) {
                const int src = peers[j][q];
                cmp[j][q].step(exported_now[src] && !exported_prev[src], own_edge,
                               exported_now[src], own_now[j]);
            }
            if (config.reference_frequency > 0.0)
                ref_cmp[j].step(ref_edge, own_edge, ref_now, own_now[j]);
            if (own_edge && ++edges_seen[j] >= config.edges_per_advance) {
                edges_seen[j] = 0;
                st[j].cs2_counter = (st[j].cs2_counter + 1) & 7;
            }
        }

        // Pump currents, then filter and VCO updates.
        for (int j = 0; j < n; ++j) {
            double i = 0.0;
            if (config.params[j].enabled) {
                switch (config.scheme) {
                    case CouplingScheme::CS1:
                        if (!peers[j].empty())
                            i = cs1_pump_current(cmp[j], config.i_cp, config.comparator);
                        break;
                    case CouplingScheme::CS2: {
                        const int sel = cs2_select(st[j], peers[j]);
                        if (sel >= 0) {
                            const auto q = static_cast<std::size_t>(
                                std::find(peers[j].begin(), peers[j].end(), sel) -
                                peers[j].begin());
                            i += config.i_cp *
                                 ((cmp[j][q].up_active(config.comparator) ? 1.0 : 0.0) -
                                  (cmp[j][q].down_active(config.comparator) ? 1.0 : 0.0));
                        }
                        break;
                    }
                    case CouplingScheme::Uncoupled:
                        break;
                }
                if (config.reference_frequency > 0.0)
                    i += config.i_cp *
                         ((ref_cmp[j].up_active(config.comparator) ? 1.0 : 0.0) -
                          (ref_cmp[j].down_active(config.comparator) ? 1.0 : 0.0));
            }
            if (i != 0.0) ++pumping[j];
            filter_step(st[j], i, disc, config.v_supply);
            if (st[j].v_ctrl <= 0.0 || st[j].v_ctrl >= config.v_supply) ++railed[j];
            vco_step(st[j], omega0[j], config.params[j].vco_gain, dt);
        }

        // Advance exported delay lines and edge memories.
        for (int j = 0; j < n; ++j) {
            exported_prev[j] = exported_now[j];
            own_prev[j] = own_now[j];
            head[j] = (head[j] + 1) % delay_line[j].size();
            // the slot we just moved past holds the sample due in delay_len steps
            delay_line[j][(head[j] + delay_line[j].size() - 1) % delay_line[j].size()] =
                st[j].out ? 1 : 0;
        }
        ref_prev = ref_now;
        ref_phase += config.reference_frequency * dt;

        if ((step + 1) % config.sample_every == 0) record((step + 1) * dt);
    }

    BehavioralResult result;
    result.trace = std::move(trace);
    result.rail_fraction.resize(n);
    result.pump_duty.resize(n);
    for (int j = 0; j < n; ++j) {
        result.rail_fraction[j] = static_cast<double>(railed[j]) / n_steps;
        result.pump_duty[j] = static_cast<double>(pumping[j]) / n_steps;
        if (result.rail_fraction[j] > 0.5) result.non_lock = true;
    }
    const auto& times = result.trace.times;
    const double t1 = times.back();
    const double t0 = times.front();
    result.mean_frequency.resize(n, 0.0);
    if (result.trace.n_samples() > 30) {
        std::vector<double> mf;
        const double w0 = t1 - (t1 - t0) / 3.0;
        for (int j = 0; j < n; ++j) {
            const auto& col = result.trace.columns[n + j];
            std::size_t i0 = 0;
            while (i0 + 1 < times.size() && times[i0] < w0) ++i0;
            result.mean_frequency[j] =
                (col.back() - col[i0]) / (times.back() - times[i0]);
        }
    }
    return result;
}

} // namespace oscnet

#endif
