#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oscnet/analysis.hpp"
#include "oscnet/pll_behavioral.hpp"
#include "oscnet/pll_linear.hpp"

using namespace oscnet;

namespace {

LoopParams reference_design() {
    LoopParams p;
    p.k_vco = 3e6;
    p.i_cp = 1.34e-6;
    p.target_phase_margin = 74.0;
    p.target_crossover = two_pi * 27e3;
    return p;
}

BehavioralConfig base_config(int n_clusters, int per_cluster) {
    BehavioralConfig c;
    c.topology = build_clustered(n_clusters, per_cluster, {IntraCoupling::AllToAll},
                                 InterCoupling::None);
    c.params.resize(c.topology.size());
    for (auto& p : c.params) {
        p.natural_frequency = two_pi * 1e7;
        p.vco_gain = 3e6;
    }
    c.filter = design_loop(reference_design());
    c.i_cp = 1.34e-6;
    c.dt = 1e-9;
    c.t_end = 1e-6;
    return c;
}

std::vector<uint8_t> square_wave(double period, double phase0, double dt, int n) {
    std::vector<uint8_t> out(n);
    for (int i = 0; i < n; ++i) {
        double ph = two_pi * (i * dt / period) + phase0;
        ph -= two_pi * std::floor(ph / two_pi);
        out[i] = ph < std::numbers::pi ? 1 : 0;
    }
    return out;
}

} // namespace

TEST_CASE("vco frequency is omega0 at zero control voltage") {
    PllState st;
    st.v_ctrl = 0.0;
    const double omega0 = two_pi * 8.5e6;
    const double dt = 1e-9;
    for (int i = 0; i < 1000; ++i) vco_step(st, omega0, 3e6, dt);
    CHECK(st.vco_phase == Catch::Approx(omega0 * 1000 * dt).epsilon(1e-12));
}

TEST_CASE("vco gain shifts the frequency by 2pi*kvco per volt") {
    PllState st;
    st.v_ctrl = 1.0;
    const double omega0 = two_pi * 8.5e6;
    for (int i = 0; i < 1000; ++i) vco_step(st, omega0, 3e6, 1e-9);
    CHECK(st.vco_phase ==
          Catch::Approx((omega0 + two_pi * 3e6) * 1e-6).epsilon(1e-12));
}

TEST_CASE("measured vco slope matches kvco via edge counting") {
    // Oracle: rising-edge counting over >= 100 periods at 5 set points.
    const double dt = 1e-9;
    const double kvco = 3e6;
    const double omega0 = two_pi * 7e6;
    std::vector<double> volts = {0.1, 0.3, 0.5, 0.7, 0.9}, freq;
    for (double v : volts) {
        PllState st;
        st.v_ctrl = v;
        std::vector<double> times, sig;
        const int n = 20000; // 20 us, >= 140 periods
        for (int i = 0; i < n; ++i) {
            vco_step(st, omega0, kvco, dt);
            times.push_back((i + 1) * dt);
            sig.push_back(st.out ? 1.0 : 0.0);
        }
        freq.push_back(edge_frequency(times, sig));
    }
    // Least-squares slope in Hz per volt.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < volts.size(); ++i) {
        sx += volts[i];
        sy += freq[i];
        sxx += volts[i] * volts[i];
        sxy += volts[i] * freq[i];
    }
    const double nn = volts.size();
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    CHECK(slope == Catch::Approx(kvco).epsilon(0.01));
}

TEST_CASE("comparator classifies lead, lag and aligned") {
    const double period = 100e-9, dt = 1e-9;
    const int n = 1000;
    auto own = square_wave(period, 0.0, dt, n);
    SECTION("identical waveforms stay aligned") {
        auto s = compare_phases(own, own, dt);
        CHECK(s.sign == CompareSign::Aligned);
        CHECK(s.overlap == 0.0);
    }
    SECTION("peer ahead by a quarter period leads") {
        auto peer = square_wave(period, two_pi / 4, dt, n);
        auto s = compare_phases(peer, own, dt);
        CHECK(s.sign == CompareSign::Lead);
    }
    SECTION("peer behind by a quarter period lags") {
        // First-edge ordering decides the cold-start pairing, so place
        // both waves mid-period: own edge at T/2, peer's a quarter later.
        auto own_mid = square_wave(period, std::numbers::pi, dt, n);
        auto peer = square_wave(period, std::numbers::pi - two_pi / 4, dt, n);
        auto s = compare_phases(peer, own_mid, dt);
        CHECK(s.sign == CompareSign::Lag);
    }
    SECTION("pulse width equals the edge separation") {
        auto peer = square_wave(period, two_pi / 4, dt, n);
        PairComparator cmp;
        double width = 0.0, width_closed = 0.0;
        int periods = 0;
        bool prev_pulse = false;
        for (int i = 1; i < n; ++i) {
            cmp.step(peer[i] && !peer[i - 1], own[i] && !own[i - 1]);
            if (cmp.lead_pulse()) width += dt;
            if (prev_pulse && !cmp.lead_pulse()) { ++periods; width_closed = width; }
            prev_pulse = cmp.lead_pulse();
        }
        REQUIRE(periods >= 8);
        CHECK(width_closed / periods == Catch::Approx(period / 4).margin(1.5 * dt));
    }
}

TEST_CASE("cs1 gating: single leader gives net positive charge") {
    const double period = 100e-9, dt = 1e-9;
    const int n = 2000;
    auto own = square_wave(period, std::numbers::pi, dt, n);
    auto leader = square_wave(period, std::numbers::pi + two_pi / 8, dt, n);
    std::vector<PairComparator> cmp(1);
    double charge = 0.0;
    for (int i = 1; i < n; ++i) {
        cmp[0].step(leader[i] && !leader[i - 1], own[i] && !own[i - 1]);
        charge += cs1_pump_current(cmp, 1e-6) * dt;
    }
    // ~ i_cp * T/8 per period once the sign memory is primed.
    const double periods = n * dt / period;
    CHECK(charge ==
          Catch::Approx(1e-6 * (period / 8) * (periods - 1)).epsilon(0.15));
}

TEST_CASE("cs1 gating: symmetric lead and lag cancel") {
    const double period = 100e-9, dt = 1e-9;
    const int n = 4000;
    auto own = square_wave(period, std::numbers::pi, dt, n);
    auto lead = square_wave(period, std::numbers::pi + two_pi / 8, dt, n);
    auto lag = square_wave(period, std::numbers::pi - two_pi / 8, dt, n);
    std::vector<PairComparator> cmp(2);
    double charge = 0.0;
    for (int i = 1; i < n; ++i) {
        cmp[0].step(lead[i] && !lead[i - 1], own[i] && !own[i - 1]);
        cmp[1].step(lag[i] && !lag[i - 1], own[i] && !own[i - 1]);
        charge += cs1_pump_current(cmp, 1e-6) * dt;
    }
    // Discretization leaves at most a couple of dt-quanta of imbalance
    // per period, plus the unprimed first period's one-sided pulse.
    const double periods = n * dt / period;
    CHECK(std::abs(charge) <= 1e-6 * (2.0 * periods * dt + period / 4));
}

TEST_CASE("cs1 with all peers aligned pumps nothing") {
    const double period = 100e-9, dt = 1e-9;
    const int n = 2000;
    auto own = square_wave(period, 0.0, dt, n);
    std::vector<PairComparator> cmp(3);
    for (int i = 1; i < n; ++i) {
        const bool e = own[i] && !own[i - 1];
        for (auto& c : cmp) c.step(e, e);
        CHECK(cs1_pump_current(cmp, 1e-6) == 0.0);
    }
}

TEST_CASE("cs2 selection cycles through peers via the 3-bit counter") {
    PllState st;
    std::vector<int> peers = {10, 11, 12, 13, 14, 15, 16};
    // Counter wraps mod 8 over 7 peers; the selection sequence repeats
    // with a period dividing 56 but not 28.
    std::vector<int> first;
    for (int edge = 0; edge < 112; ++edge) {
        first.push_back(cs2_select(st, peers));
        st.cs2_counter = (st.cs2_counter + 1) & 7;
    }
    for (int edge = 0; edge < 56; ++edge)
        CHECK(first[edge] == first[edge + 56]);
    bool repeats_earlier = true;
    for (int edge = 0; edge < 56; ++edge)
        if (first[edge] != first[(edge + 28) % 56]) { repeats_earlier = false; break; }
    CHECK_FALSE(repeats_earlier);
}

TEST_CASE("cs2 with a single peer always selects it") {
    PllState st;
    for (st.cs2_counter = 0; st.cs2_counter < 8; ++st.cs2_counter)
        CHECK(cs2_select(st, {42}) == 42);
    CHECK(cs2_select(st, {}) == -1);
}

TEST_CASE("filter at equilibrium stays put") {
    auto f = design_loop(reference_design());
    PllState st;
    st.v_c1 = st.v_ctrl = 0.4;
    filter_step(st, 0.0, f, 1e-9);
    CHECK(st.v_c1 == Catch::Approx(0.4).epsilon(1e-12));
    CHECK(st.v_ctrl == Catch::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("constant current ramps the node at i/(c1+c2)") {
    auto f = design_loop(reference_design());
    PllState st;
    st.v_c1 = st.v_ctrl = 0.1;
    const double dt = 1e-9, i_pump = 1e-6;
    FilterDiscretization d(f, dt);
    const double t_total = 20.0 * f.r * f.c2; // >> RC transient
    const long n = std::lround(t_total / dt);
    for (long s = 0; s < n; ++s) filter_step(st, i_pump, d, 1e6);
    double v_before = st.v_ctrl;
    for (long s = 0; s < 1000; ++s) filter_step(st, i_pump, d, 1e6);
    const double slope = (st.v_ctrl - v_before) / (1000 * dt);
    CHECK(slope == Catch::Approx(i_pump / (f.c1 + f.c2)).epsilon(1e-3));
}

TEST_CASE("charge impulse lands on c2 first") {
    auto f = design_loop(reference_design());
    PllState st;
    st.v_c1 = st.v_ctrl = 0.2;
    const double dt = 1e-10; // << r*c2
    const double q = 1e-12;
    filter_step(st, q / dt, f, dt, 10.0);
    CHECK(st.v_ctrl - 0.2 == Catch::Approx(q / f.c2).epsilon(0.01));
}

TEST_CASE("trapezoidal filter conserves charge") {
    auto f = design_loop(reference_design());
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> amp(-1.34e-6, 1.34e-6);
    const double dt = 1e-9;
    FilterDiscretization d(f, dt);
    for (int rep = 0; rep < 100; ++rep) {
        PllState st;
        st.v_c1 = st.v_ctrl = 0.5;
        double v1_0 = st.v_c1, v2_0 = st.v_ctrl, q_in = 0.0;
        for (int s = 0; s < 2000; ++s) {
            const double i = amp(rng);
            filter_step(st, i, d, 1e6); // rails far away: never clamped
            q_in += i * dt;
        }
        const double q_stored =
            f.c1 * (st.v_c1 - v1_0) + f.c2 * (st.v_ctrl - v2_0);
        CHECK(q_stored == Catch::Approx(q_in).margin(1e-6 * std::abs(q_in) + 1e-21));
    }
}

TEST_CASE("delay quantization rounds to whole samples") {
    auto c = base_config(1, 2);
    c = set_delay(c, 0.0);
    CHECK(c.delay_tau == 0.0);
    c = set_delay(c, 25e-9);
    CHECK(c.delay_tau == Catch::Approx(25e-9).epsilon(1e-12));
    c = set_delay(c, 25.4e-9);
    CHECK(c.delay_tau == Catch::Approx(25e-9).epsilon(1e-12));
    CHECK_THROWS_AS(set_delay(c, 1.0), config_error);
}

TEST_CASE("uncoupled scheme reproduces free-running vcos") {
    auto c = base_config(1, 3);
    c.scheme = CouplingScheme::Uncoupled;
    c.initial_phases = {0.0, 1.0, 2.0};
    c.t_end = 2e-6;
    auto r = run_behavioral(c);
    for (int j = 0; j < 3; ++j) {
        // Mid-rail start: frequency is exactly the natural frequency.
        const double expect = c.initial_phases[j] + two_pi * 1e7 * 2e-6;
        CHECK(r.trace.columns[3 + j].back() == Catch::Approx(expect).margin(1e-8));
    }
}

TEST_CASE("behavioral run is deterministic") {
    auto c = base_config(1, 3);
    c.scheme = CouplingScheme::CS1;
    c.initial_phases = {0.0, 0.4, -0.4};
    c.t_end = 5e-6;
    auto a = run_behavioral(c);
    auto b = run_behavioral(c);
    REQUIRE(a.trace.n_samples() == b.trace.n_samples());
    for (std::size_t col = 0; col < a.trace.n_columns(); ++col)
        for (std::size_t s = 0; s < a.trace.n_samples(); ++s)
            CHECK(a.trace.columns[col][s] == b.trace.columns[col][s]);
}

TEST_CASE("two coupled plls shrink their phase offset") {
    auto c = base_config(1, 2);
    c.scheme = CouplingScheme::CS1;
    c.initial_phases = {0.0, std::numbers::pi / 2};
    c.t_end = 400e-6;
    c.sample_every = 100;
    auto r = run_behavioral(c);
    const auto& p0 = r.trace.columns[2];
    const auto& p1 = r.trace.columns[3];
    const double start = std::abs(p1.front() - p0.front());
    const double end = std::abs(p1.back() - p0.back());
    CHECK(end < 0.2 * start);
    // The offset may undershoot a little (loop overshoot) but never by
    // more than a fraction of the initial error.
    for (std::size_t s = 0; s + 1 < r.trace.n_samples(); ++s)
        CHECK(p1[s] - p0[s] > -0.5 * start);
}

TEST_CASE("cs2 also locks two plls, more slowly on average") {
    auto c = base_config(1, 2);
    c.scheme = CouplingScheme::CS2;
    c.initial_phases = {0.0, std::numbers::pi / 2};
    c.t_end = 600e-6;
    c.sample_every = 100;
    auto r = run_behavioral(c);
    const double end = std::abs(r.trace.columns[3].back() - r.trace.columns[2].back());
    CHECK(end < 0.3 * (std::numbers::pi / 2));
}

TEST_CASE("symmetric three-pll cluster leaves the center phase still") {
    auto c = base_config(1, 3);
    c.scheme = CouplingScheme::CS1;
    const double period = 1.0 / 1e7;
    c.dt = period / 100.0;
    c.initial_phases = {0.0, two_pi / 16, -two_pi / 16};
    c.t_end = 10.0 * period;
    auto r = run_behavioral(c);
    const double expect = two_pi * 1e7 * c.t_end;
    const double drift = r.trace.columns[3].back() - 0.0 - expect;
    CHECK(std::abs(drift) < two_pi * (c.dt / period) * 10.0);
}

TEST_CASE("single pll locks to the reference") {
    auto c = base_config(1, 1);
    c.reference_frequency = two_pi * 1e7;
    c.initial_phases = {std::numbers::pi / 2};
    c.t_end = 800e-6;
    c.sample_every = 1;
    c.record_outputs = true;
    auto r = run_behavioral(c);
    CHECK_FALSE(r.non_lock);
    // Frequency via the rising-edge oracle over the final 200 us.
    std::vector<double> times, sig;
    for (std::size_t s = 0; s < r.trace.n_samples(); ++s) {
        if (r.trace.times[s] < 600e-6) continue;
        times.push_back(r.trace.times[s]);
        sig.push_back(r.trace.columns[2][s]);
    }
    const double f_meas = edge_frequency(times, sig);
    CHECK(f_meas == Catch::Approx(1e7).epsilon(1e-5));
}

TEST_CASE("rail saturation reports a non-lock outcome") {
    auto c = base_config(1, 1);
    c.reference_frequency = two_pi * 1.5e7; // beyond the VCO tuning range
    c.i_cp = 50e-6;          // fast slew so the run spends most time railed
    c.initial_v_ctrl = 0.9;
    c.dt = 0.5e-9;
    c.t_end = 200e-6;
    c.sample_every = 1000;
    auto r = run_behavioral(c);
    CHECK(r.non_lock);
    CHECK(r.rail_fraction[0] > 0.5);
}
