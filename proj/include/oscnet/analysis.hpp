#ifndef OSCNET_ANALYSIS_HPP
#define OSCNET_ANALYSIS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/phase.hpp"
#include "oscnet/topology.hpp"
#include "oscnet/trace.hpp"
#include "oscnet/types.hpp"

namespace oscnet {

struct OrderParameter {
    double r = 0.0;    // in [0, 1]
    double psi = 0.0;  // mean phase, radians
};

// Mean phasor r e^{i psi} = (1/N) sum e^{i theta_j} over enabled
// oscillators.
inline OrderParameter order_parameter(const PhaseVector& phases,
                                      const std::vector<OscillatorParams>* params = nullptr) {
    std::complex<double> acc(0.0, 0.0);
    int n = 0;
    for (std::size_t j = 0; j < phases.size(); ++j) {
        if (params && !(*params)[j].enabled) continue;
        acc += std::polar(1.0, phases[j]);
        ++n;
    }
    if (n == 0) throw std::domain_error("order_parameter: no enabled oscillators");
    acc /= static_cast<double>(n);
    return {std::min(std::abs(acc), 1.0), std::arg(acc)};
}

enum class LocalWindow { Cluster, Neighbors };

// Order parameter restricted to each oscillator's cluster or graph
// neighborhood (self included). Empty windows report nullopt.
inline std::vector<std::optional<double>>
local_order(const PhaseVector& phases, const Topology& topo,
            const std::vector<OscillatorParams>& params,
            LocalWindow window = LocalWindow::Cluster) {
    const int n = topo.size();
    std::vector<std::optional<double>> out(n);
    for (int i = 0; i < n; ++i) {
        if (!params[i].enabled) continue;
        std::complex<double> acc(0.0, 0.0);
        int cnt = 0;
        auto add = [&](int j) {
            if (!params[j].enabled) return;
            acc += std::polar(1.0, phases[j]);
            ++cnt;
        };
        if (window == LocalWindow::Cluster) {
            for (int j = 0; j < n; ++j)
                if (topo.cluster_of[j] == topo.cluster_of[i]) add(j);
        } else {
            add(i);
            for (const Edge& e : topo.edges)
                if (e.dst == i) add(e.src);
        }
        if (cnt > 0) out[i] = std::min(std::abs(acc) / cnt, 1.0);
    }
    return out;
}

// Across-cluster variance of time-averaged local order over the final
// half of the trace; zero for a network synchronized everywhere.
inline double chimera_index(const SimTrace& trace, const Topology& topo,
                            const std::vector<OscillatorParams>& params) {
    const std::size_t n_samples = trace.n_samples();
    if (n_samples == 0) throw std::domain_error("chimera_index: empty trace");
    const int n = topo.size();
    const std::size_t start = n_samples / 2;
    std::vector<double> accum(n, 0.0);
    std::vector<int> counts(n, 0);
    PhaseVector phases(n);
    for (std::size_t s = start; s < n_samples; ++s) {
        for (int j = 0; j < n; ++j) phases[j] = trace.columns[j][s];
        auto locals = local_order(phases, topo, params, LocalWindow::Cluster);
        for (int j = 0; j < n; ++j)
            if (locals[j]) { accum[j] += *locals[j]; ++counts[j]; }
    }
    // Cluster-level means, then variance across clusters.
    std::vector<double> cluster_mean;
    for (int c = 0; c < topo.n_clusters; ++c) {
        double sum = 0.0;
        int cnt = 0;
        for (int j : topo.members(c))
            if (counts[j] > 0) { sum += accum[j] / counts[j]; ++cnt; }
        if (cnt > 0) cluster_mean.push_back(sum / cnt);
    }
    if (cluster_mean.empty()) return 0.0;
    double mean = 0.0;
    for (double v : cluster_mean) mean += v;
    mean /= cluster_mean.size();
    double var = 0.0;
    for (double v : cluster_mean) var += (v - mean) * (v - mean);
    return var / cluster_mean.size();
}

// Per-column mean angular velocity over [t_start, t_end], computed from
// the unwrapped endpoints; exact for affine phase trajectories.
inline std::vector<double> mean_frequency(const SimTrace& trace, double t_start,
                                          double t_end) {
    const auto& times = trace.times;
    if (times.empty()) throw std::domain_error("mean_frequency: empty trace");
    std::size_t i0 = 0, i1 = times.size() - 1;
    while (i0 + 1 < times.size() && times[i0] < t_start - 1e-15) ++i0;
    while (i1 > 0 && times[i1] > t_end + 1e-15) --i1;
    if (i1 < i0 + 10)
        throw std::domain_error("mean_frequency: window shorter than 10 samples");
    const double span = times[i1] - times[i0];
    std::vector<double> out;
    out.reserve(trace.n_columns());
    for (const auto& col : trace.columns)
        out.push_back((col[i1] - col[i0]) / span);
    return out;
}

struct SettlingResult {
    bool settled = false;
    double time = 0.0;  // seconds, meaningful only when settled
};

// Earliest time after which the signal stays within +-band*|final| of
// `final_value` for the remainder of the trace.
inline SettlingResult settling_time(const std::vector<double>& times,
                                    const std::vector<double>& values,
                                    double band, double final_value) {
    if (times.size() != values.size() || times.empty())
        throw std::domain_error("settling_time: bad series");
    const double tol = band * std::abs(final_value);
    std::size_t last_out = times.size(); // sentinel: never out of band
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::abs(values[i] - final_value) > tol) last_out = i;
    if (last_out == times.size()) return {true, 0.0};
    if (last_out + 1 >= times.size()) return {false, 0.0};
    return {true, times[last_out + 1]};
}

// Locked iff the largest pairwise mean-frequency spread over the final
// third of the trace stays below tol (rad/s).
inline bool lock_detect(const SimTrace& trace, double tol_rad_s) {
    const double t0 = trace.times.front();
    const double t1 = trace.times.back();
    auto freqs = mean_frequency(trace, t1 - (t1 - t0) / 3.0, t1);
    double lo = freqs[0], hi = freqs[0];
    for (double f : freqs) {
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    return (hi - lo) < tol_rad_s;
}

// Frequency of a sampled binary (0/1) signal from its rising-edge
// count; the observable the hardware itself exposes.
inline double edge_frequency(const std::vector<double>& times,
                             const std::vector<double>& signal) {
    double t_first = 0.0, t_last = 0.0;
    long edges = 0;
    for (std::size_t i = 1; i < signal.size(); ++i) {
        if (signal[i] > 0.5 && signal[i - 1] <= 0.5) {
            if (edges == 0) t_first = times[i];
            t_last = times[i];
            ++edges;
        }
    }
    if (edges < 2) throw std::domain_error("edge_frequency: fewer than two rising edges");
    return static_cast<double>(edges - 1) / (t_last - t_first);
}

} // namespace oscnet

#endif
