#ifndef OSCNET_CONFIG_HPP
#define OSCNET_CONFIG_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/phase.hpp"
#include "oscnet/pll_behavioral.hpp"
#include "oscnet/pll_linear.hpp"
#include "oscnet/topology.hpp"
#include "oscnet/types.hpp"

namespace oscnet {

enum class RunMode { Kuramoto, Behavioral, LoopDesign };

// Line-oriented `section.key = value` experiment description. The raw
// key/value map is kept alongside the typed view so sweeps can override
// a single key and re-materialize. Human-facing units (Hz, MHz, us, ns)
// are converted to rad/s and seconds here, at the boundary.
struct ExperimentConfig {
    std::map<std::string, std::string> raw;

    RunMode mode = RunMode::Kuramoto;
    std::uint64_t seed = 0;

    // topology
    int n_clusters = 1;
    int per_cluster = 2;
    IntraSpec intra;
    InterCoupling inter = InterCoupling::None;
    std::vector<int> disabled_ids;

    // oscillators
    std::vector<double> omega;   // rad/s, per oscillator
    double kvco = 3e6;           // Hz/V
    std::vector<double> initial_phases;  // empty -> seeded uniform random

    CouplingConfig coupling;
    HistoryInit history_init = HistoryInit::ConstantAtInitial;

    // integration
    double dt = 0.0;             // seconds; 0 -> auto
    double t_end = 0.0;
    int sample_every = 1;

    // linear loop
    LoopParams loop;

    // behavioral
    CouplingScheme scheme = CouplingScheme::Uncoupled;
    int edges_per_advance = 1;
    ComparatorMode comparator = ComparatorMode::LeadLagPulse;
    double v_supply = 1.0;
    double reference_frequency = 0.0;  // rad/s

    // sweep grid (cartesian when parameter2 present)
    std::string sweep_parameter;
    std::vector<double> sweep_values;
    std::string sweep_parameter2;
    std::vector<double> sweep_values2;

    int n_oscillators() const { return n_clusters * per_cluster; }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': not a number: '" + v + "'");
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    double d = parse_double(key, v);
    long l = std::lround(d);
    if (d != static_cast<double>(l))
        throw config_error("config key '" + key + "': not an integer: '" + v + "'");
    return l;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(parse_double(key, cell));
    if (out.empty()) throw config_error("config key '" + key + "': empty list");
    return out;
}

} // namespace detail

inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> raw;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) + ": empty key");
        raw[key] = value;
    }
    return raw;
}

inline ExperimentConfig materialize_config(std::map<std::string, std::string> raw);

inline ExperimentConfig parse_config(const std::string& text) {
    return materialize_config(parse_key_values(text));
}

inline ExperimentConfig materialize_config(std::map<std::string, std::string> raw) {
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_list;

    ExperimentConfig c;
    c.raw = raw;
    std::set<std::string> seen;
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = raw.find(key);
        if (it == raw.end()) return std::nullopt;
        seen.insert(key);
        return it->second;
    };

    if (auto v = get("mode")) {
        if (*v == "kuramoto") c.mode = RunMode::Kuramoto;
        else if (*v == "behavioral") c.mode = RunMode::Behavioral;
        else if (*v == "loopdesign") c.mode = RunMode::LoopDesign;
        else throw config_error("mode must be kuramoto, behavioral or loopdesign");
    }
    if (auto v = get("seed")) {
        try {
            std::size_t pos = 0;
            c.seed = std::stoull(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument(*v);
        } catch (const std::exception&) {
            throw config_error("config key 'seed': not an unsigned integer: '" + *v + "'");
        }
    }

    if (auto v = get("topology.n_clusters")) c.n_clusters = int(parse_int("topology.n_clusters", *v));
    if (auto v = get("topology.per_cluster")) c.per_cluster = int(parse_int("topology.per_cluster", *v));
    if (c.n_clusters < 1 || c.per_cluster < 1)
        throw config_error("topology sizes must be >= 1");
    if (auto v = get("topology.intra")) {
        if (*v == "all_to_all") c.intra.mode = IntraCoupling::AllToAll;
        else if (*v == "sparse") c.intra.mode = IntraCoupling::Sparse;
        else throw config_error("topology.intra must be all_to_all or sparse");
    }
    if (auto v = get("topology.sparse_p")) c.intra.sparse_p = parse_double("topology.sparse_p", *v);
    if (auto v = get("topology.inter")) {
        if (*v == "none") c.inter = InterCoupling::None;
        else if (*v == "ring") c.inter = InterCoupling::RingNearestNeighbor;
        else if (*v == "chain") c.inter = InterCoupling::ChainNearestNeighbor;
        else throw config_error("topology.inter must be none, ring or chain");
    }
    if (auto v = get("topology.disabled")) {
        for (double d : parse_list("topology.disabled", *v))
            c.disabled_ids.push_back(static_cast<int>(d));
    }

    const int n = c.n_oscillators();
    double omega_common = two_pi * 1e7;
    if (auto v = get("osc.omega_hz")) {
        auto list = parse_list("osc.omega_hz", *v);
        if (list.size() == 1) omega_common = two_pi * list[0];
        else if (static_cast<int>(list.size()) == n) {
            c.omega.resize(n);
            for (int i = 0; i < n; ++i) c.omega[i] = two_pi * list[i];
        } else
            throw config_error("osc.omega_hz must have 1 or n_oscillators entries");
    }
    if (c.omega.empty()) c.omega.assign(n, omega_common);
    if (auto v = get("osc.omega_spread_hz")) {
        const double spread = two_pi * parse_double("osc.omega_spread_hz", *v);
        std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> u(-spread, spread);
        for (double& w : c.omega) w += u(rng);
    }
    if (auto v = get("osc.kvco_mhz_per_v")) c.kvco = 1e6 * parse_double("osc.kvco_mhz_per_v", *v);
    if (auto v = get("init.phases")) {
        if (*v != "random") {
            c.initial_phases = parse_list("init.phases", *v);
            if (static_cast<int>(c.initial_phases.size()) != n)
                throw config_error("init.phases must list one phase per oscillator");
        }
    } else {
        c.initial_phases.assign(n, 0.0);
    }

    if (auto v = get("coupling.strength_hz"))
        c.coupling.strength = two_pi * parse_double("coupling.strength_hz", *v);
    if (auto v = get("coupling.strength_rel")) {
        // coupling as a fraction of the mean natural frequency
        double mean = 0.0;
        for (double w : c.omega) mean += w;
        c.coupling.strength = parse_double("coupling.strength_rel", *v) * mean / n;
    }
    if (auto v = get("coupling.delay_us")) {
        const double us = parse_double("coupling.delay_us", *v);
        if (us < 0.0) throw config_error("coupling.delay_us: delay must be >= 0");
        c.coupling.delay = 1e-6 * us;
    }
    if (auto v = get("coupling.phase_lag")) c.coupling.phase_lag = parse_double("coupling.phase_lag", *v);
    if (auto v = get("coupling.normalization")) {
        if (*v == "global") c.coupling.normalization = Normalization::GlobalN;
        else if (*v == "indegree") c.coupling.normalization = Normalization::InDegree;
        else throw config_error("coupling.normalization must be global or indegree");
    }
    c.coupling.validate();
    if (auto v = get("coupling.history_init")) {
        if (*v == "constant") c.history_init = HistoryInit::ConstantAtInitial;
        else if (*v == "back_extrapolate") c.history_init = HistoryInit::BackExtrapolateNatural;
        else throw config_error("coupling.history_init must be constant or back_extrapolate");
    }

    if (auto v = get("sim.dt_us")) c.dt = 1e-6 * parse_double("sim.dt_us", *v);
    if (auto v = get("sim.t_end_us")) c.t_end = 1e-6 * parse_double("sim.t_end_us", *v);
    if (auto v = get("sim.sample_every")) c.sample_every = int(parse_int("sim.sample_every", *v));
    if (c.sample_every < 1) throw config_error("sim.sample_every must be >= 1");

    if (auto v = get("loop.kvco_mhz_per_v")) c.loop.k_vco = 1e6 * parse_double("loop.kvco_mhz_per_v", *v);
    if (auto v = get("loop.icp_ua")) c.loop.i_cp = 1e-6 * parse_double("loop.icp_ua", *v);
    if (auto v = get("loop.divider_n")) c.loop.divider_n = int(parse_int("loop.divider_n", *v));
    if (auto v = get("loop.phase_margin_deg")) c.loop.target_phase_margin = parse_double("loop.phase_margin_deg", *v);
    if (auto v = get("loop.bandwidth_khz")) c.loop.target_crossover = two_pi * 1e3 * parse_double("loop.bandwidth_khz", *v);
    c.loop.validate();

    if (auto v = get("behav.scheme")) {
        if (*v == "uncoupled") c.scheme = CouplingScheme::Uncoupled;
        else if (*v == "cs1") c.scheme = CouplingScheme::CS1;
        else if (*v == "cs2") c.scheme = CouplingScheme::CS2;
        else throw config_error("behav.scheme must be uncoupled, cs1 or cs2");
    }
    if (auto v = get("behav.edges_per_advance")) c.edges_per_advance = int(parse_int("behav.edges_per_advance", *v));
    if (auto v = get("behav.comparator")) {
        if (*v == "leadlag") c.comparator = ComparatorMode::LeadLagPulse;
        else if (*v == "xor") c.comparator = ComparatorMode::Xor;
        else throw config_error("behav.comparator must be leadlag or xor");
    }
    if (auto v = get("behav.v_supply")) c.v_supply = parse_double("behav.v_supply", *v);
    if (auto v = get("behav.reference_mhz"))
        c.reference_frequency = two_pi * 1e6 * parse_double("behav.reference_mhz", *v);

    if (auto v = get("sweep.parameter")) c.sweep_parameter = *v;
    if (auto v = get("sweep.values")) c.sweep_values = parse_list("sweep.values", *v);
    if (auto v = get("sweep.parameter2")) c.sweep_parameter2 = *v;
    if (auto v = get("sweep.values2")) c.sweep_values2 = parse_list("sweep.values2", *v);
    if (!c.sweep_parameter.empty() && c.sweep_values.empty())
        throw config_error("sweep.parameter given without sweep.values");
    if (!c.sweep_parameter2.empty() && c.sweep_values2.empty())
        throw config_error("sweep.parameter2 given without sweep.values2");

    for (const auto& [key, value] : raw)
        if (!seen.count(key))
            throw config_error("unknown config key '" + key + "'");
    for (int id : c.disabled_ids)
        if (id < 0 || id >= n)
            throw config_error("topology.disabled: id out of range");
    return c;
}

// Canonical form: sorted key = value lines. parse -> emit -> parse is
// the identity on the raw map.
inline std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream os;
    for (const auto& [key, value] : c.raw) os << key << " = " << value << '\n';
    return os.str();
}

inline Topology config_topology(const ExperimentConfig& c) {
    IntraSpec intra = c.intra;
    intra.seed = c.seed;
    return build_clustered(c.n_clusters, c.per_cluster, intra, c.inter);
}

inline std::vector<OscillatorParams> config_oscillators(const ExperimentConfig& c) {
    std::vector<OscillatorParams> params(c.n_oscillators());
    for (int i = 0; i < c.n_oscillators(); ++i) {
        params[i].natural_frequency = c.omega[i];
        params[i].vco_gain = c.kvco;
    }
    for (int id : c.disabled_ids) params[id].enabled = false;
    return params;
}

inline PhaseVector config_initial_phases(const ExperimentConfig& c) {
    if (!c.initial_phases.empty()) return c.initial_phases;
    std::mt19937_64 rng(c.seed ^ 0xd1b54a32d192ed03ull);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    PhaseVector phases(c.n_oscillators());
    for (double& p : phases) p = u(rng);
    return phases;
}

inline KuramotoSystem config_kuramoto_system(const ExperimentConfig& c) {
    KuramotoSystem sys;
    sys.topology = config_topology(c);
    sys.params = config_oscillators(c);
    sys.coupling = c.coupling;
    sys.initial_phases = config_initial_phases(c);
    sys.history_init = c.history_init;
    sys.validate();
    return sys;
}

inline BehavioralConfig config_behavioral(const ExperimentConfig& c) {
    BehavioralConfig b;
    b.topology = config_topology(c);
    b.params = config_oscillators(c);
    b.filter = design_loop(c.loop);
    b.i_cp = c.loop.i_cp;
    b.scheme = c.scheme;
    b.edges_per_advance = c.edges_per_advance;
    b.comparator = c.comparator;
    b.dt = c.dt;
    if (b.dt <= 0.0) {
        double omega_max = 0.0;
        for (double w : c.omega) omega_max = std::max(omega_max, std::abs(w));
        if (c.reference_frequency > 0.0)
            omega_max = std::max(omega_max, c.reference_frequency);
        b.dt = (two_pi / omega_max) / 100.0;  // edge quantization <= 1% of period
    }
    b.v_supply = c.v_supply;
    b.t_end = c.t_end;
    b.reference_frequency = c.reference_frequency;
    b.initial_phases = config_initial_phases(c);
    b.sample_every = c.sample_every;
    b = set_delay(b, c.coupling.delay);
    return b;
}

// Default integration step: tau/10 when delayed, else a small fraction
// of the fastest period.
inline double config_kuramoto_dt(const ExperimentConfig& c) {
    if (c.dt > 0.0) return c.dt;
    double omega_max = 0.0;
    for (double w : c.omega) omega_max = std::max(omega_max, std::abs(w));
    double dt = (two_pi / omega_max) / 50.0;
    if (c.coupling.delay > 0.0) dt = std::min(dt, c.coupling.delay / 10.0);
    return dt;
}

} // namespace oscnet

#endif
