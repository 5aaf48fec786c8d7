#ifndef OSCNET_KURAMOTO_HPP
#define OSCNET_KURAMOTO_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/history.hpp"
#include "oscnet/phase.hpp"
#include "oscnet/topology.hpp"
#include "oscnet/trace.hpp"
#include "oscnet/types.hpp"

namespace oscnet {

enum class HistoryInit { ConstantAtInitial, BackExtrapolateNatural };

// Delayed Kuramoto system on an arbitrary weighted directed graph:
//   dtheta_i/dt = omega_i + (K/N_i) sum_j w_ij sin(theta_j(t-tau) - theta_i(t) - alpha)
// The sum runs over enabled in-neighbors only (no self term); disabled
// oscillators keep drifting at their natural frequency but neither send
// nor receive coupling.
struct KuramotoSystem {
    std::vector<OscillatorParams> params;
    Topology topology;
    CouplingConfig coupling;
    PhaseVector initial_phases;
    HistoryInit history_init = HistoryInit::ConstantAtInitial;

    int size() const { return static_cast<int>(params.size()); }

    void validate() const {
        if (params.size() != initial_phases.size() ||
            static_cast<int>(params.size()) != topology.size())
            throw config_error("kuramoto: oscillator count mismatch across fields");
        for (const auto& p : params) p.validate();
        coupling.validate();
        for (double th : initial_phases)
            if (!std::isfinite(th))
                throw config_error("kuramoto: non-finite initial phase");
    }
};

namespace detail {

// Precomputed per-target neighbor lists and normalizations, built once
// per integration so the hot loop never walks the edge list.
struct CouplingPlan {
    std::vector<std::vector<std::pair<int, double>>> in;  // per target
    std::vector<double> inv_norm;                         // 0 => no coupling term

    CouplingPlan(const KuramotoSystem& sys) {
        const int n = sys.size();
        in.resize(n);
        inv_norm.assign(n, 0.0);
        int enabled_total = 0;
        for (const auto& p : sys.params)
            if (p.enabled) ++enabled_total;
        for (const Edge& e : sys.topology.edges)
            if (sys.params[e.src].enabled && sys.params[e.dst].enabled)
                in[e.dst].emplace_back(e.src, e.weight);
        for (int i = 0; i < n; ++i) {
            if (!sys.params[i].enabled || in[i].empty()) continue;
            if (sys.coupling.normalization == Normalization::GlobalN)
                inv_norm[i] = enabled_total > 0 ? 1.0 / enabled_total : 0.0;
            else
                inv_norm[i] = 1.0 / static_cast<double>(in[i].size());
        }
    }
};

inline void derivative_impl(const KuramotoSystem& sys, const CouplingPlan& plan,
                            const PhaseVector& phases, const PhaseVector& delayed,
                            PhaseVector& out) {
    const int n = sys.size();
    const double k = sys.coupling.strength;
    const double alpha = sys.coupling.phase_lag;
    for (int i = 0; i < n; ++i) {
        double d = sys.params[i].natural_frequency;
        if (plan.inv_norm[i] != 0.0 && k != 0.0) {
            double acc = 0.0;
            for (const auto& [j, w] : plan.in[i])
                acc += w * std::sin(delayed[j] - phases[i] - alpha);
            d += k * plan.inv_norm[i] * acc;
        }
        out[i] = d;
    }
}

} // namespace detail

// Right-hand side of the model at one instant. `delayed` carries
// theta_j(t - tau); pass the current phases for tau = 0.
inline PhaseVector derivative(const KuramotoSystem& sys, const PhaseVector& phases,
                              const PhaseVector& delayed) {
    sys.validate();
    detail::CouplingPlan plan(sys);
    PhaseVector out(phases.size());
    detail::derivative_impl(sys, plan, phases, delayed, out);
    return out;
}

// Convenience overload reading the delayed phases from history buffers.
inline PhaseVector derivative(const KuramotoSystem& sys, double t,
                              const PhaseVector& phases,
                              const std::vector<HistoryBuffer>& history) {
    if (sys.coupling.delay == 0.0) return derivative(sys, phases, phases);
    PhaseVector delayed(phases.size());
    for (std::size_t j = 0; j < phases.size(); ++j)
        delayed[j] = history[j].sample(t - sys.coupling.delay);
    return derivative(sys, phases, delayed);
}

// Fixed-step RK4. For tau > 0 the delayed phase vector is read once per
// step at t - tau and held fixed across the four stages; with
// dt <= tau/10 the induced error sits below the RK4 truncation error.
// For tau = 0 the coupling uses the live stage state (classic RK4).
inline SimTrace integrate(const KuramotoSystem& sys, double dt, double t_end,
                          int sample_every = 1) {
    sys.validate();
    if (!(dt > 0.0)) throw config_error("integrate: dt must be > 0");
    if (t_end < dt) throw config_error("integrate: t_end must be >= dt");
    if (sample_every < 1) throw config_error("integrate: sample_every must be >= 1");
    const double tau = sys.coupling.delay;
    if (tau > 0.0 && dt > tau / 10.0 * (1.0 + 1e-12))
        throw config_error("integrate: dt must be <= tau/10 when tau > 0");

    const int n = sys.size();
    detail::CouplingPlan plan(sys);

    double omega_max = 0.0;
    for (const auto& p : sys.params)
        omega_max = std::max(omega_max, std::abs(p.natural_frequency));
    const double derivative_limit = 1e3 * omega_max;

    std::vector<HistoryBuffer> history;
    if (tau > 0.0) {
        history.assign(n, HistoryBuffer(dt, tau + 2.0 * dt));
        const int seed_steps = static_cast<int>(std::ceil(tau / dt)) + 2;
        for (int s = seed_steps; s >= 1; --s) {
            const double ts = -s * dt;
            for (int j = 0; j < n; ++j) {
                double v = sys.initial_phases[j];
                if (sys.history_init == HistoryInit::BackExtrapolateNatural)
                    v += sys.params[j].natural_frequency * ts;
                history[j].push(ts, v);
            }
        }
        for (int j = 0; j < n; ++j) history[j].push(0.0, sys.initial_phases[j]);
    }

    PhaseVector y = sys.initial_phases;
    PhaseVector delayed(n), k1(n), k2(n), k3(n), k4(n), tmp(n);

    SimTrace trace;
    trace.labels.reserve(n);
    for (int j = 0; j < n; ++j) trace.labels.push_back("theta_" + std::to_string(j));
    trace.columns.assign(n, {});
    auto record = [&](double t) {
        trace.times.push_back(t);
        for (int j = 0; j < n; ++j) trace.columns[j].push_back(y[j]);
    };
    record(0.0);

    const long n_steps = std::lround(t_end / dt);
    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        if (tau > 0.0)
            for (int j = 0; j < n; ++j) delayed[j] = history[j].sample(t - tau);

        auto rhs = [&](const PhaseVector& state, PhaseVector& out) {
            detail::derivative_impl(sys, plan, state, tau > 0.0 ? delayed : state, out);
        };
        rhs(y, k1);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
        rhs(tmp, k2);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
        rhs(tmp, k3);
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + dt * k3[j];
        rhs(tmp, k4);
        for (int j = 0; j < n; ++j) {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if (!std::isfinite(y[j]) || std::abs(k1[j]) > derivative_limit)
                throw numeric_error("integrate: divergence at t = " +
                                    std::to_string(t) + " s");
        }
        const double t_next = (step + 1) * dt;
        if (tau > 0.0)
            for (int j = 0; j < n; ++j) history[j].push(t_next, y[j]);
        if ((step + 1) % sample_every == 0) record(t_next);
    }
    return trace;
}

// Locked-network frequency: the root Omega of
//   Omega = omega - K * factor * sin(Omega * tau)
// continuous in tau from Omega(0) = omega. `factor` is the effective
// coupling multiplier; an all-to-all graph of N oscillators with GlobalN
// normalization and no self term has factor (N-1)/N.
inline double sync_frequency_prediction(double omega, double k, double tau,
                                        double factor = 1.0) {
    if (tau == 0.0 || k == 0.0) return omega;
    const double kc = k * factor;
    auto g = [&](double w) { return w - omega + kc * std::sin(w * tau); };

    // Damped fixed-point iteration from omega to land near the branch
    // that continues from tau = 0.
    double w = omega;
    const double lambda = 0.5;
    int it = 0;
    for (; it < 10000; ++it) {
        const double next = (1.0 - lambda) * w + lambda * (omega - kc * std::sin(w * tau));
        if (std::abs(next - w) <= 1e-12 * std::abs(omega)) { w = next; break; }
        w = next;
    }
    if (it == 10000)
        throw numeric_error("sync_frequency_prediction: fixed point did not converge");

    // Bisection refinement around the fixed-point estimate.
    double half = std::max(1e-9 * std::abs(omega), 2.0 * std::abs(g(w)));
    double lo = w - half, hi = w + half;
    for (int grow = 0; grow < 60 && g(lo) * g(hi) > 0.0; ++grow) {
        half *= 2.0;
        lo = w - half;
        hi = w + half;
    }
    if (g(lo) * g(hi) > 0.0)
        throw numeric_error("sync_frequency_prediction: no bracket around fixed point");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(lo) * g(mid) <= 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oscnet

#endif
