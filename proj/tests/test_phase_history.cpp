#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oscnet/history.hpp"
#include "oscnet/phase.hpp"

using namespace oscnet;

TEST_CASE("wrap_phase basic values") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(3.0 * std::numbers::pi) == Catch::Approx(-std::numbers::pi));
    CHECK(wrap_phase(-std::numbers::pi / 4) == Catch::Approx(-std::numbers::pi / 4));
    CHECK(wrap_phase(std::numbers::pi) == Catch::Approx(-std::numbers::pi));
}

TEST_CASE("wrap_phase rejects non-finite input") {
    CHECK_THROWS_AS(wrap_phase(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(wrap_phase(INFINITY), std::domain_error);
}

TEST_CASE("wrap_phase is idempotent and 2pi-periodic") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_int_distribution<long> ks(-1000000, 1000000);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        const double w = wrap_phase(x);
        CHECK(w >= -std::numbers::pi);
        CHECK(w < std::numbers::pi);
        CHECK(wrap_phase(w) == w);
        const long k = ks(rng);
        CHECK(wrap_phase(x + two_pi * double(k)) == Catch::Approx(w).margin(1e-9));
    }
}

TEST_CASE("history sample is exact at nodes and linear in between") {
    HistoryBuffer h(0.1, 1.0);
    for (int i = 0; i <= 10; ++i) h.push(0.1 * i, double(i * i));
    CHECK(h.sample(0.5) == 25.0);
    CHECK(h.sample(1.0) == 100.0);
    // midway between samples v0=25 (t=0.5), v1=36 (t=0.6)
    CHECK(h.sample(0.55) == Catch::Approx(30.5));
}

TEST_CASE("history lookup at zero age returns the current value") {
    HistoryBuffer h(0.5, 2.0);
    h.push(0.0, 1.0);
    h.push(0.5, 7.0);
    CHECK(h.sample(0.5) == 7.0);
}

TEST_CASE("history linear signals are reproduced exactly") {
    const double dt = 0.01;
    HistoryBuffer h(dt, 1.0);
    for (int i = 0; i <= 200; ++i) h.push(dt * i, 5.0 * dt * i);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const double t = u(rng);
        CHECK(h.sample(t) == Catch::Approx(5.0 * t).epsilon(1e-12));
    }
}

TEST_CASE("history out-of-window lookup reports the delay overflow") {
    HistoryBuffer h(0.1, 0.5);
    for (int i = 0; i <= 20; ++i) h.push(0.1 * i, 0.0);
    CHECK_THROWS_AS(h.sample(2.0 - 5.0), out_of_window_error);
}

TEST_CASE("history interpolation error is second order on sin(t)") {
    auto max_err = [](double dt) {
        HistoryBuffer h(dt, 3.0);
        const int n = static_cast<int>(3.0 / dt);
        for (int i = 0; i <= n; ++i) h.push(dt * i, std::sin(dt * i));
        double worst = 0.0;
        for (int k = 1; k < 500; ++k) {
            const double t = 0.5 + 2.0 * k / 500.0;
            worst = std::max(worst, std::abs(h.sample(t) - std::sin(t)));
        }
        return worst;
    };
    const double coarse = max_err(0.01);
    const double fine = max_err(0.005);
    CHECK(coarse / fine >= 3.5);
}
