#include <cmath>
#include <random>

#include "doctest.h"
#include "sstsim/dab_controller.hpp"
#include "sstsim/freqdomain.hpp"

using namespace sstsim;
using namespace sstsim::freq;

TEST_CASE("open loop equals the product of its factors (property)") {
    const SpmParams p;
    const DabGains g = DabGains::defaults_for(p);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lf(0.0, 4.0);
    for (bool res : {true, false}) {
        GmvdcOptions o;
        o.resonant = res;
        for (int i = 0; i < 300; ++i) {
            const double f = std::pow(10.0, lf(rng));
            const Complex prod = plant_factor(f, p, g, o) * pir_continuous(f, g, res) * sensor_factor(f, g) *
                                 computation_delay(f, g);
            const Complex ev = gmvdc_eval(f, p, g, o);
            CHECK(std::abs(ev - prod) <= 1e-12 * std::abs(prod));
            // unwrapped phase agrees with the principal argument modulo 360
            const double d = std::remainder(gmvdc_phase_deg(f, p, g, o) - std::arg(ev) * 180.0 / kPi, 360.0);
            CHECK(std::abs(d) < 1e-6);
        }
    }
}

TEST_CASE("plant asymptote with the proportional gain") {
    const SpmParams p;
    const DabGains g = DabGains::defaults_for(p);
    const double coeff = 3.0 * 750.0 * 0.0082 / (2.0 * kPi * 20e3 * 137e-6 * 268e-6);
    CHECK(coeff == doctest::Approx(4000.0).epsilon(1e-3));
    CHECK(coeff / (2.0 * kPi) == doctest::Approx(636.6).epsilon(1e-3));
    for (double f : {10.0, 636.6, 3000.0}) {
        CHECK(std::abs(plant_factor(f, p, g) * g.k_pmv) == doctest::Approx(coeff / (2.0 * kPi * f)));
    }
}

TEST_CASE("margins of an integrator with delay") {
    const double k = 2.0 * kPi * 500.0, T = 100e-6;
    const auto loop = integrator_with_delay(k, T);
    const auto r = analyse(loop, 1.0, 20e3, 200);
    REQUIRE(r.crossover_hz);
    REQUIRE(r.phase_margin_deg);
    REQUIRE(r.gain_margin_db);
    CHECK(*r.crossover_hz == doctest::Approx(500.0).epsilon(1e-6));
    CHECK(*r.phase_margin_deg == doctest::Approx(90.0 - k * T * 180.0 / kPi).epsilon(1e-6));
    CHECK(*r.phase_crossover_hz == doctest::Approx(1.0 / (4.0 * T)).epsilon(1e-6));
    CHECK(*r.gain_margin_db == doctest::Approx(-20.0 * std::log10(2.0 * k * T / kPi)).epsilon(1e-6));
}

TEST_CASE("nominal MVDC loop margins") {
    const SpmParams p;
    const DabGains g = DabGains::defaults_for(p);
    const auto r = analyse(gmvdc_loop(p, g), 1.0, 10e3, 200);
    REQUIRE(r.crossover_hz);
    CHECK(*r.crossover_hz == doctest::Approx(643.0).epsilon(20.0 / 643.0));
    CHECK(*r.phase_margin_deg == doctest::Approx(55.0).epsilon(5.0 / 55.0));
    CHECK(*r.gain_margin_db == doctest::Approx(10.0).epsilon(0.1));
}

TEST_CASE("margins are insensitive to grid refinement") {
    const SpmParams p;
    const DabGains g = DabGains::defaults_for(p);
    const auto loop = gmvdc_loop(p, g);
    const auto a = analyse(loop, 1.0, 10e3, 200);
    for (int per : {400, 1000}) {
        const auto b = analyse(loop, 1.0, 10e3, per);
        CHECK(std::abs(*b.crossover_hz / *a.crossover_hz - 1.0) < 1e-3);
        CHECK(std::abs(*b.phase_margin_deg / *a.phase_margin_deg - 1.0) < 1e-3);
        CHECK(std::abs(*b.gain_margin_db / *a.gain_margin_db - 1.0) < 1e-3);
    }
}

TEST_CASE("log grid") {
    const auto f = log_grid(1.0, 1e4, 200);
    CHECK(f.size() == 801);
    CHECK(f.front() == 1.0);
    CHECK(f.back() == 1e4);
    for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] > f[i - 1]);
}

TEST_CASE("timescale audit") {
    const DabGains g;
    const auto ok = timescale_audit(643.0, 30.0, g.omega_ref);
    CHECK(ok.ratio == doctest::Approx(21.4).epsilon(1e-2));
    CHECK(ok.pass);

    const auto slow = timescale_audit(643.0, 100.0, g.omega_ref);
    CHECK_FALSE(slow.pass);
    CHECK(slow.violations.size() == 1);

    const auto off = timescale_audit(643.0, 30.0, kTwoPi * 160.0);
    CHECK_FALSE(off.pass);
}

TEST_CASE("sampled PIR matches its continuous prototype") {
    const SpmParams p;
    const DabGains g = DabGains::defaults_for(p);
    const auto m = pir_discretisation_error(g, p.phase_limit(), 2e3);
    CHECK(m.max_phase_err_deg < 1.0);
    CHECK(m.max_mag_err_db < 0.2);

    // direct spot check at 120 Hz
    const dab::DabController c(g, p.phase_limit());
    const auto d = c.pir_response(120.0);
    const auto a = pir_continuous(120.0, g);
    CHECK(std::abs(d) == doctest::Approx(std::abs(a)).epsilon(0.03));
}
