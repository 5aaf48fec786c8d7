#ifndef OSCNET_SWEEP_HPP
#define OSCNET_SWEEP_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oscnet/analysis.hpp"
#include "oscnet/config.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/pll_behavioral.hpp"
#include "oscnet/trace.hpp"

namespace oscnet {

// splitmix64 step; derives per-grid-point seeds so any subset of a
// sweep reproduces individual points.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct SweepRow {
    std::size_t index = 0;
    std::vector<double> parameter_values;
    bool ok = false;
    std::string status;       // "ok" or the failure message
    double final_r = 0.0;
    bool locked = false;
    double mean_freq = 0.0;   // rad/s, network average over the final third
    double chimera = 0.0;
};

struct SweepResult {
    std::vector<std::string> parameter_names;
    std::vector<SweepRow> rows;
    std::vector<SimTrace> traces;  // one per grid point (empty on failure)
};

namespace detail {

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct PointOutcome {
    SimTrace trace;
    double final_r = 0.0;
    bool locked = false;
    double mean_freq = 0.0;
    double chimera = 0.0;
};

inline PointOutcome run_point(const ExperimentConfig& c) {
    PointOutcome out;
    if (c.mode == RunMode::Kuramoto) {
        KuramotoSystem sys = config_kuramoto_system(c);
        const double dt = config_kuramoto_dt(c);
        if (!(c.t_end > 0.0)) throw config_error("sim.t_end_us must be set and > 0");
        out.trace = integrate(sys, dt, c.t_end, c.sample_every);
        const int n = sys.size();
        PhaseVector last(n);
        for (int j = 0; j < n; ++j) last[j] = out.trace.columns[j].back();
        out.final_r = order_parameter(last, &sys.params).r;
        double omega_mean = 0.0;
        for (const auto& p : sys.params) omega_mean += p.natural_frequency;
        omega_mean /= n;
        out.locked = lock_detect(out.trace, 1e-3 * std::abs(omega_mean));
        auto freqs = mean_frequency(out.trace,
                                    out.trace.times.back() * 2.0 / 3.0,
                                    out.trace.times.back());
        for (double f : freqs) out.mean_freq += f;
        out.mean_freq /= n;
        out.chimera = chimera_index(out.trace, sys.topology, sys.params);
    } else if (c.mode == RunMode::Behavioral) {
        BehavioralConfig b = config_behavioral(c);
        if (!(c.t_end > 0.0)) throw config_error("sim.t_end_us must be set and > 0");
        b.t_end = c.t_end;
        BehavioralResult r = run_behavioral(b);
        out.trace = std::move(r.trace);
        const int n = b.size();
        PhaseVector last(n);
        for (int j = 0; j < n; ++j) last[j] = out.trace.columns[n + j].back();
        out.final_r = order_parameter(last, &b.params).r;
        for (double f : r.mean_frequency) out.mean_freq += f;
        out.mean_freq /= n;
        double lo = r.mean_frequency[0], hi = r.mean_frequency[0];
        for (double f : r.mean_frequency) {
            lo = std::min(lo, f);
            hi = std::max(hi, f);
        }
        double omega_mean = 0.0;
        for (const auto& p : b.params) omega_mean += p.natural_frequency;
        omega_mean /= n;
        out.locked = !r.non_lock && (hi - lo) < 1e-3 * std::abs(omega_mean);
    } else {
        throw config_error("run_sweep: loopdesign mode has no sweep semantics");
    }
    return out;
}

} // namespace detail

// Run every grid point independently on a small worker pool. Points are
// indexed in row-major order over (values, values2); results land in
// index order whatever the completion order, and each point derives its
// own seed from (base seed, index), so the output is identical for any
// worker count.
inline SweepResult run_sweep(const ExperimentConfig& config, int workers = 1,
                             bool keep_traces = true) {
    if (config.sweep_parameter.empty())
        throw config_error("run_sweep: no sweep.parameter configured");
    if (workers < 1) workers = 1;

    SweepResult result;
    result.parameter_names.push_back(config.sweep_parameter);
    const bool two = !config.sweep_parameter2.empty();
    if (two) result.parameter_names.push_back(config.sweep_parameter2);

    std::vector<std::vector<double>> grid;
    for (double v1 : config.sweep_values) {
        if (two)
            for (double v2 : config.sweep_values2) grid.push_back({v1, v2});
        else
            grid.push_back({v1});
    }

    result.rows.resize(grid.size());
    result.traces.resize(grid.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            SweepRow row;
            row.index = i;
            row.parameter_values = grid[i];
            try {
                auto raw = config.raw;
                raw[config.sweep_parameter] = detail::format_value(grid[i][0]);
                if (two) raw[config.sweep_parameter2] = detail::format_value(grid[i][1]);
                raw.erase("sweep.parameter");
                raw.erase("sweep.values");
                raw.erase("sweep.parameter2");
                raw.erase("sweep.values2");
                raw["seed"] = std::to_string(mix_seed(config.seed, i));
                ExperimentConfig point = materialize_config(raw);
                auto outcome = detail::run_point(point);
                row.ok = true;
                row.status = "ok";
                row.final_r = outcome.final_r;
                row.locked = outcome.locked;
                row.mean_freq = outcome.mean_freq;
                row.chimera = outcome.chimera;
                if (keep_traces) result.traces[i] = std::move(outcome.trace);
            } catch (const std::exception& e) {
                row.ok = false;
                row.status = e.what();
            }
            result.rows[i] = std::move(row);
        }
    };

    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return result;
}

// ---- output emission ------------------------------------------------

namespace detail {

inline void check_fresh(const std::filesystem::path& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw io_error("refusing to overwrite " + path.string() +
                       " (pass --force to allow)");
}

inline std::ofstream open_out(const std::filesystem::path& path, bool force) {
    check_fresh(path, force);
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path.string());
    return os;
}

} // namespace detail

inline void emit_sweep_csv(const SweepResult& result,
                           const std::filesystem::path& outdir, bool force) {
    auto os = detail::open_out(outdir / "sweep.csv", force);
    os << "index";
    for (const auto& n : result.parameter_names) os << ',' << n;
    os << ",status,final_r,locked,mean_freq_rad_s,chimera_index\n";
    os << std::setprecision(17);
    for (const auto& row : result.rows) {
        os << row.index;
        for (double v : row.parameter_values) os << ',' << v;
        os << ',' << (row.ok ? "ok" : "failed") << ',' << row.final_r << ','
           << (row.locked ? 1 : 0) << ',' << row.mean_freq << ',' << row.chimera
           << '\n';
    }
}

inline void emit_gnuplot_script(const std::filesystem::path& outdir,
                                const std::string& name, const std::string& body,
                                bool force) {
    auto os = detail::open_out(outdir / name, force);
    os << "# gnuplot script\nset datafile separator ','\nset key autotitle columnhead\n"
       << body;
}

// Full sweep artifact set: sweep.csv, per-run trace CSVs, summary.txt
// and a plot script for the r-vs-parameter curve.
inline void emit_outputs(const SweepResult& result, const ExperimentConfig& config,
                         const std::filesystem::path& outdir, bool force) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw io_error("cannot create directory " + outdir.string());

    emit_sweep_csv(result, outdir, force);

    for (std::size_t i = 0; i < result.traces.size(); ++i) {
        if (result.traces[i].n_samples() == 0) continue;
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu.csv", i);
        detail::check_fresh(outdir / name, force);
        write_csv(result.traces[i], (outdir / name).string());
    }

    {
        auto os = detail::open_out(outdir / "summary.txt", force);
        const auto now = std::chrono::system_clock::to_time_t(
            std::chrono::system_clock::now());
        os << "# generated " << now << "\n";  // timestamps only in comments
        os << "grid_points: " << result.rows.size() << '\n';
        std::size_t failures = 0;
        for (const auto& r : result.rows)
            if (!r.ok) ++failures;
        os << "failures: " << failures << '\n';
        os << "seed: " << config.seed << '\n';
        for (const auto& r : result.rows) {
            os << "point " << r.index << ':';
            for (double v : r.parameter_values) os << ' ' << v;
            os << " status=" << r.status << " r=" << r.final_r
               << " locked=" << (r.locked ? 1 : 0) << '\n';
        }
    }

    emit_gnuplot_script(outdir, "plot_sweep.gp",
                        "plot 'sweep.csv' using 2:4 with linespoints title 'final r'\n",
                        force);
}

} // namespace oscnet

#endif
