// Command-line front end: loop design reports, step/Bode traces,
// capacitance sweeps, Kuramoto and behavioral simulations, and
// parameter sweeps. Exit codes: 0 ok, 1 config error, 2 numerical
// error, 3 I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "oscnet/analysis.hpp"
#include "oscnet/config.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/pll_behavioral.hpp"
#include "oscnet/pll_linear.hpp"
#include "oscnet/sweep.hpp"
#include "oscnet/trace.hpp"

namespace fs = std::filesystem;
using namespace oscnet;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    int workers = 1;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_config = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (need_config) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--workers", opts.workers, "worker thread count");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_flag("--force", opts.force, "allow overwriting existing outputs");
}

ExperimentConfig load_config(const CommonOpts& opts) {
    std::ifstream is(opts.config_path);
    if (!is) throw io_error("cannot open config: " + opts.config_path);
    std::stringstream ss;
    ss << is.rdbuf();
    auto raw = parse_key_values(ss.str());
    if (opts.seed) raw["seed"] = std::to_string(*opts.seed);
    return materialize_config(raw);
}

fs::path ensure_outdir(const CommonOpts& opts) {
    if (opts.out_dir.empty()) throw config_error("--out is required for this command");
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw io_error("cannot create directory " + opts.out_dir);
    return opts.out_dir;
}

void write_text(const fs::path& path, const std::string& text, bool force) {
    if (!force && fs::exists(path))
        throw io_error("refusing to overwrite " + path.string() +
                       " (pass --force to allow)");
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path.string());
    os << text;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = lo * std::pow(hi / lo, double(i) / (points - 1));
    return g;
}

int cmd_design(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    LoopFilter filter = design_loop(cfg.loop);
    const std::string report = design_report(cfg.loop, filter);
    std::cout << report;
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        write_text(outdir / "design.txt", report, opts.force);

        auto grid = log_grid(cfg.loop.target_crossover / 1e3,
                             cfg.loop.target_crossover * 1e3, 400);
        auto resp = open_loop_response(filter, cfg.loop, grid);
        std::ostringstream bode;
        bode << "omega_rad_s,gain_db,phase_deg\n" << std::setprecision(17);
        for (std::size_t i = 0; i < resp.frequencies.size(); ++i)
            bode << resp.frequencies[i] << ',' << resp.gain_db[i] << ','
                 << resp.phase_deg[i] << '\n';
        write_text(outdir / "bode.csv", bode.str(), opts.force);
        emit_gnuplot_script(outdir, "plot_bode.gp",
                            "set logscale x\n"
                            "plot 'bode.csv' using 1:2 with lines title 'gain (dB)', \\\n"
                            "     'bode.csv' using 1:3 axes x1y2 with lines title 'phase (deg)'\n",
                            opts.force);
    }
    return 0;
}

SimTrace step_trace(const ExperimentConfig& cfg, const LoopFilter& filter) {
    const double dt = 0.5e-2 / filter.omega_p();
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : 600e-6;
    return closed_loop_step(filter, cfg.loop, dt, t_end);
}

int cmd_step(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    LoopFilter filter = design_loop(cfg.loop);
    SimTrace trace = step_trace(cfg, filter);
    auto settle = settling_time(trace.times, trace.columns[0], 0.01, 1.0);
    std::cout << "final_value: " << trace.columns[0].back() << '\n'
              << "settling_time_us_1pct: "
              << (settle.settled ? settle.time * 1e6 : -1.0) << '\n';
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        if (!opts.force && fs::exists(outdir / "step.csv"))
            throw io_error("refusing to overwrite " + (outdir / "step.csv").string() +
                           " (pass --force to allow)");
        SimTrace named = trace;
        named.labels = {"phi_out"};
        write_csv(named, (outdir / "step.csv").string());
        emit_gnuplot_script(outdir, "plot_step.gp",
                            "plot 'step.csv' using 1:2 with lines title 'phi_out'\n",
                            opts.force);
    }
    return 0;
}

int cmd_csweep(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    LoopFilter filter = design_loop(cfg.loop);
    auto grid = log_grid(filter.c2 / 30.0, filter.c2 * 30.0, 121);
    auto points = capacitance_sweep(cfg.loop, filter, grid);
    std::ostringstream csv;
    csv << "c2_f,phase_margin_deg\n" << std::setprecision(17);
    double best_c2 = 0.0, best_margin = -1.0;
    for (const auto& p : points) {
        if (!p.valid) { csv << p.c2 << ",\n"; continue; }
        csv << p.c2 << ',' << p.margin_deg << '\n';
        if (p.margin_deg > best_margin) { best_margin = p.margin_deg; best_c2 = p.c2; }
    }
    std::cout << "designed_c2_f: " << filter.c2 << '\n'
              << "optimal_c2_f: " << best_c2 << '\n'
              << "optimal_margin_deg: " << best_margin << '\n';
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        write_text(outdir / "margin_vs_c2.csv", csv.str(), opts.force);
        emit_gnuplot_script(outdir, "plot_margin.gp",
                            "set logscale x\n"
                            "plot 'margin_vs_c2.csv' using 1:2 with lines title 'phase margin (deg)'\n",
                            opts.force);
    }
    return 0;
}

int cmd_sim_kuramoto(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    KuramotoSystem sys = config_kuramoto_system(cfg);
    if (!(cfg.t_end > 0.0)) throw config_error("sim.t_end_us must be set and > 0");
    SimTrace trace = integrate(sys, config_kuramoto_dt(cfg), cfg.t_end, cfg.sample_every);
    PhaseVector last(sys.size());
    for (int j = 0; j < sys.size(); ++j) last[j] = trace.columns[j].back();
    auto op = order_parameter(last, &sys.params);
    std::cout << "final_r: " << op.r << '\n'
              << "locked: " << (lock_detect(trace, 1e-3 * sys.params[0].natural_frequency) ? 1 : 0)
              << '\n';
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        if (!opts.force && fs::exists(outdir / "trace.csv"))
            throw io_error("refusing to overwrite " + (outdir / "trace.csv").string() +
                           " (pass --force to allow)");
        write_csv(trace, (outdir / "trace.csv").string());
        write_text(outdir / "topology.txt", serialize_topology(sys.topology), opts.force);
    }
    return 0;
}

int cmd_sim_pll(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    if (!(cfg.t_end > 0.0)) throw config_error("sim.t_end_us must be set and > 0");
    BehavioralConfig b = config_behavioral(cfg);
    b.t_end = cfg.t_end;
    BehavioralResult result = run_behavioral(b);
    std::ostringstream summary;
    summary << "non_lock: " << (result.non_lock ? 1 : 0) << '\n';
    for (int j = 0; j < b.size(); ++j)
        summary << "pll_" << j << ": mean_freq_hz="
                << result.mean_frequency[j] / two_pi
                << " rail_fraction=" << result.rail_fraction[j]
                << " pump_duty=" << result.pump_duty[j] << '\n';
    std::cout << summary.str();
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        if (!opts.force && fs::exists(outdir / "trace.csv"))
            throw io_error("refusing to overwrite " + (outdir / "trace.csv").string() +
                           " (pass --force to allow)");
        write_csv(result.trace, (outdir / "trace.csv").string());
        write_text(outdir / "summary.txt", summary.str(), opts.force);
        write_text(outdir / "topology.txt", serialize_topology(b.topology), opts.force);
    }
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    auto outdir = ensure_outdir(opts);
    SweepResult result = run_sweep(cfg, opts.workers);
    emit_outputs(result, cfg, outdir, opts.force);
    std::size_t failed = 0;
    for (const auto& r : result.rows)
        if (!r.ok) ++failed;
    std::cout << "points: " << result.rows.size() << " failed: " << failed << '\n';
    return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& trace_path) {
    SimTrace trace = read_csv_file(trace_path);
    // Phase columns: theta_* (kuramoto) or phase_* (behavioral).
    std::vector<std::size_t> phase_cols;
    for (std::size_t c = 0; c < trace.labels.size(); ++c)
        if (trace.labels[c].rfind("theta_", 0) == 0 ||
            trace.labels[c].rfind("phase_", 0) == 0)
            phase_cols.push_back(c);
    if (phase_cols.empty()) throw config_error("analyze: no phase columns in trace");

    std::ostringstream csv;
    csv << "metric,oscillator_or_cluster,value\n" << std::setprecision(17);
    PhaseVector last;
    for (auto c : phase_cols) last.push_back(trace.columns[c].back());
    auto op = order_parameter(last);
    csv << "final_r,all," << op.r << '\n';
    csv << "final_psi,all," << op.psi << '\n';
    const double t1 = trace.times.back();
    const double t0 = trace.times.front();
    SimTrace phases_only;
    phases_only.times = trace.times;
    for (auto c : phase_cols) {
        phases_only.labels.push_back(trace.labels[c]);
        phases_only.columns.push_back(trace.columns[c]);
    }
    auto freqs = mean_frequency(phases_only, t1 - (t1 - t0) / 3.0, t1);
    for (std::size_t j = 0; j < freqs.size(); ++j)
        csv << "mean_frequency_rad_s," << j << ',' << freqs[j] << '\n';
    std::cout << csv.str();
    if (!opts.out_dir.empty()) {
        auto outdir = ensure_outdir(opts);
        write_text(outdir / "metrics.csv", csv.str(), opts.force);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled-oscillator network simulator and PLL design toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string trace_path;

    auto* design = app.add_subcommand("design", "synthesize the loop filter");
    add_common(design, opts);
    auto* step = app.add_subcommand("step", "closed-loop step response");
    add_common(step, opts);
    auto* csweep = app.add_subcommand("csweep", "phase margin vs C2 sweep");
    add_common(csweep, opts);
    auto* simk = app.add_subcommand("sim-kuramoto", "delayed Kuramoto simulation");
    add_common(simk, opts);
    auto* simp = app.add_subcommand("sim-pll", "behavioral PLL network simulation");
    add_common(simp, opts);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep");
    add_common(sweep, opts);
    auto* analyze = app.add_subcommand("analyze", "metrics from a trace CSV");
    add_common(analyze, opts, false);
    analyze->add_option("--trace", trace_path, "trace CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) return cmd_design(opts);
        if (step->parsed()) return cmd_step(opts);
        if (csweep->parsed()) return cmd_csweep(opts);
        if (simk->parsed()) return cmd_sim_kuramoto(opts);
        if (simp->parsed()) return cmd_sim_pll(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (analyze->parsed()) return cmd_analyze(opts, trace_path);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
