#include <cmath>
#include <random>

#include "doctest.h"
#include "sstsim/central_controller.hpp"
#include "sstsim/plant.hpp"

using namespace sstsim;
using namespace sstsim::central;

namespace {

double angle_diff(double a, double b) { return std::remainder(a - b, kTwoPi); }

Abc balanced(double theta, double amp) {
    return {amp * std::cos(theta), amp * std::cos(theta - kTwoPi / 3.0), amp * std::cos(theta + kTwoPi / 3.0)};
}

}  // namespace

TEST_CASE("clarke round trip (property)") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> th(-10.0, 10.0), a(0.0, 1e4);
    for (int i = 0; i < 200; ++i) {
        const double theta = th(rng), amp = a(rng);
        const auto ab = clarke(balanced(theta, amp));
        CHECK(ab.alpha == doctest::Approx(amp * std::cos(theta)).epsilon(1e-9));
        CHECK(ab.beta == doctest::Approx(amp * std::sin(theta)).epsilon(1e-9));
        const auto back = inverse_clarke(ab);
        const auto ref = balanced(theta, amp);
        for (int k = 0; k < 3; ++k) CHECK(back[k] == doctest::Approx(ref[k]).scale(amp + 1.0));
    }
}

TEST_CASE("PLL") {
    const SystemParams sys;
    const double dt = 1.0 / sys.f_c;
    const double amp = sys.v_phase_peak();

    SUBCASE("locks to a balanced 60 Hz set") {
        Pll pll(sys.omega_0, sys.pll_bw_hz, dt, amp);
        double theta = 1.0;
        for (int i = 0; i < 5000; ++i) {
            theta += sys.omega_0 * dt;
            pll.step(balanced(theta, amp));
        }
        CHECK(std::abs(angle_diff(pll.state().theta_hat, theta + sys.omega_0 * dt)) < 0.01);
        CHECK(pll.state().v_amp == doctest::Approx(amp).epsilon(1e-3));
    }
    SUBCASE("re-locks after a step to 60.5 Hz within 200 ms") {
        Pll pll(sys.omega_0, sys.pll_bw_hz, dt, amp);
        double theta = 0.0;
        pll.lock_to(theta, amp);
        for (int i = 0; i < 2000; ++i) {
            theta += sys.omega_0 * dt;
            pll.step(balanced(theta, amp));
        }
        const double w1 = kTwoPi * 60.5;
        double last_bad = 0.0;
        for (int i = 1; i <= 5000; ++i) {
            theta += w1 * dt;
            pll.step(balanced(theta, amp));
            if (std::abs(angle_diff(pll.state().theta_hat, theta + w1 * dt)) >= 0.01) last_bad = i * dt;
        }
        MESSAGE("re-lock time " << last_bad * 1e3 << " ms");
        CHECK(last_bad < 0.2);
        CHECK(pll.state().omega_hat == doctest::Approx(w1).epsilon(1e-4));
    }
    SUBCASE("free-runs without voltage") {
        Pll pll(sys.omega_0, sys.pll_bw_hz, dt, amp);
        for (int i = 0; i < 1000; ++i) pll.step({0.0, 0.0, 0.0});
        CHECK(pll.state().omega_hat == sys.omega_0);
        CHECK(pll.cycles() >= 5);
    }
}

TEST_CASE("LVDC regulator") {
    const SystemParams sys;
    const double c_eq = equivalent_lv_capacitance(sys, 268e-6, 2150.0 / 750.0);
    CHECK(c_eq == doctest::Approx(sys.c_lv + 18 * 268e-6 * std::pow(2150.0 / 750.0, 2)));
    LvdcRegulator r(750.0, sys.lvdc_bw_hz, c_eq, sys.s_rated, 1.0 / sys.f_c);
    CHECK(r.kp() == doctest::Approx(kTwoPi * 30.0 * c_eq * 750.0));

    CHECK(r.step(750.0, 0.0) == 0.0);
    r.reset();
    CHECK(r.step(750.0, 1333.3) == doctest::Approx(1e6).epsilon(1e-4));

    // output stays within the apparent power rating (property)
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> v(0.0, 1500.0), i(-3000.0, 3000.0);
    r.reset();
    for (int k = 0; k < 2000; ++k) CHECK(std::abs(r.step(v(rng), i(rng))) <= 1.1e6);
}

TEST_CASE("current references") {
    const auto z = current_refs(0.3, 0.0, 0.0, 10e3, 100.0);
    CHECK(z.alpha == 0.0);
    CHECK(z.beta == 0.0);

    const double v_amp = std::sqrt(2.0) * 7621.0;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> th(0.0, kTwoPi), p(-1e6, 1e6), q(-450e3, 450e3);
    for (int n = 0; n < 200; ++n) {
        const double theta = th(rng), pr = p(rng), qr = q(rng);
        const auto i = current_refs(theta, pr, qr, v_amp, 100.0);
        const double va = v_amp * std::cos(theta), vb = v_amp * std::sin(theta);
        CHECK(1.5 * (va * i.alpha + vb * i.beta) == doctest::Approx(pr).scale(1e6));
        CHECK(1.5 * (vb * i.alpha - va * i.beta) == doctest::Approx(qr).scale(1e6));
    }
    const auto full = current_refs(0.7, 1e6, 0.0, v_amp, 100.0);
    CHECK(std::hypot(full.alpha, full.beta) == doctest::Approx(61.9).epsilon(1e-3));
    CHECK(std::hypot(1e6, 450e3) == doctest::Approx(1.097e6).epsilon(1e-3));

    const auto low = current_refs(0.7, 1e6, 0.0, 50.0, 100.0);
    CHECK(low.alpha == 0.0);
}

TEST_CASE("current controller") {
    const SystemParams sys;
    const double dt = 1.0 / sys.f_c;
    const auto cc = CurrentController::tuned(sys.l_filter, sys.omega_0, sys.cc_bw_hz, dt);
    const double bw = CurrentController::bandwidth(cc.kp(), cc.kr(), sys.omega_0, sys.l_filter, dt);
    CHECK(bw == doctest::Approx(400.0).epsilon(0.1));
    CHECK(std::abs(cc.closed_loop(60.0, sys.l_filter)) == doctest::Approx(1.0).epsilon(1e-6));

    SUBCASE("zero in, zero out") {
        auto c = cc;
        for (int i = 0; i < 10; ++i) {
            const auto u = c.step({}, {}, {});
            CHECK(u.alpha == 0.0);
            CHECK(u.beta == 0.0);
        }
    }
    SUBCASE("tracks a 60 Hz reference with zero steady-state error") {
        // L di/dt = v_grid - v_conv, command applied one sample late
        auto c = cc;
        AlphaBeta i{}, pending{};
        double err_tail = 0.0;
        const double amp = 61.9, v_amp = sys.v_phase_peak();
        for (int k = 0; k < 10000; ++k) {
            const double th = sys.omega_0 * k * dt;
            const AlphaBeta vg{v_amp * std::cos(th), v_amp * std::sin(th)};
            const AlphaBeta ref{amp * std::cos(th + 0.4), amp * std::sin(th + 0.4)};
            if (k > 9000) err_tail = std::max(err_tail, std::hypot(ref.alpha - i.alpha, ref.beta - i.beta));
            const auto cmd = c.step(ref, i, vg);
            const AlphaBeta applied = pending;
            pending = cmd;
            i.alpha += dt / sys.l_filter * (vg.alpha - applied.alpha);
            i.beta += dt / sys.l_filter * (vg.beta - applied.beta);
        }
        CHECK(err_tail < 0.01 * amp);
    }
}

TEST_CASE("nearest-level modulation") {
    const double v = 2150.0;
    SUBCASE("zero command") {
        const auto r = multilevel_modulate(0.0, v, 6);
        for (auto w : r.words) CHECK(w == GateWord::Zero);
        for (double d : r.duty) CHECK(d == 0.0);
    }
    SUBCASE("full stack") {
        const auto r = multilevel_modulate(6.0 * v, v, 6);
        for (auto w : r.words) CHECK(w == GateWord::Positive);
        CHECK_FALSE(r.saturated);
    }
    SUBCASE("three and a half levels") {
        const auto r = multilevel_modulate(3.5 * v, v, 6);
        int on = 0, half = 0, off = 0;
        for (double d : r.duty) {
            if (d == 1.0) ++on;
            else if (d == doctest::Approx(0.5)) ++half;
            else if (d == 0.0) ++off;
        }
        CHECK(on == 3);
        CHECK(half == 1);
        CHECK(off == 2);
    }
    SUBCASE("over-range clamps and flags") {
        const auto r = multilevel_modulate(-7.0 * v, v, 6);
        CHECK(r.saturated);
        for (auto w : r.words) CHECK(w == GateWord::Negative);
    }
    SUBCASE("duty sum reproduces the command; code 3 never appears (property)") {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> cmd(-6.0 * v, 6.0 * v), car(0.0, 1.0);
        std::uniform_int_distribution<int> rot(-20, 20);
        for (int n = 0; n < 500; ++n) {
            const double c = cmd(rng);
            const auto r = multilevel_modulate(c, v, 6, rot(rng), car(rng));
            double sum = 0.0;
            for (double d : r.duty) sum += d * v;
            CHECK(sum == doctest::Approx(c).scale(v));
            for (auto w : r.words) CHECK(static_cast<int>(w) <= 2);
        }
    }
    SUBCASE("roles rotate") {
        const auto a = multilevel_modulate(1.0 * v, v, 6, 0);
        const auto b = multilevel_modulate(1.0 * v, v, 6, 1);
        CHECK(a.duty[0] == 1.0);
        CHECK(b.duty[1] == 1.0);
        CHECK(b.duty[0] == 0.0);
    }
    CHECK(interleaved_duty(3.0 * v, v, 6) == doctest::Approx(0.5));
    CHECK(interleaved_duty(100.0 * v, v, 6) == 1.0);
}

TEST_CASE("start-up sequencer") {
    StartupSequencer s(750.0);
    s.start(0.0);
    auto c = s.step(0.0, 0.0, false);
    CHECK(c.phase == StartupPhase::Precharge);
    CHECK_FALSE(c.breaker_close);
    CHECK_FALSE(c.afe_enable);
    CHECK_FALSE(c.dab_lv_enable);
    CHECK(c.precharge_connect);

    c = s.step(0.1, 712.4, false);
    CHECK(c.phase == StartupPhase::Precharge);
    c = s.step(0.2, 712.5, false);
    CHECK(c.phase == StartupPhase::DutyRamp);
    c = s.step(0.45, 750.0, false);
    CHECK(c.dab_lv_duty == doctest::Approx(0.25));
    c = s.step(0.2 + 0.6, 750.0, false);
    CHECK(c.phase == StartupPhase::MvdcRegulate);
    CHECK_FALSE(c.breaker_close);

    SUBCASE("ready token closes the breaker, then nominal") {
        c = s.step(1.0, 750.0, true);
        CHECK(c.phase == StartupPhase::BreakerClose);
        CHECK_FALSE(c.precharge_connect);
        CHECK_FALSE(c.breaker_close);
        c = s.step(1.05, 750.0, false);
        CHECK(c.breaker_close);
        c = s.step(1.07, 750.0, false);
        CHECK(c.phase == StartupPhase::Nominal);
        CHECK(c.afe_enable);
    }
    SUBCASE("no token aborts at the timeout") {
        c = s.step(0.8 + 4.99, 750.0, false);
        CHECK(c.phase == StartupPhase::MvdcRegulate);
        c = s.step(0.8 + 5.0, 750.0, false);
        CHECK(c.phase == StartupPhase::Idle);
        CHECK(c.aborted);
        CHECK_FALSE(c.dab_lv_enable);
        CHECK_FALSE(c.breaker_close);
    }
}

TEST_CASE("monitoring channel latency") {
    MonitoringChannel ch(0.02);
    CHECK_FALSE(ch.poll(1.0));
    ch.send(1.0);
    CHECK_FALSE(ch.poll(1.019));
    CHECK(ch.poll(1.02));
    CHECK_FALSE(ch.poll(1.03));
}

TEST_CASE("composite controller has a one-sample output delay") {
    CentralDesign d;
    d.c_equivalent = equivalent_lv_capacitance(d.sys, 268e-6, d.k_v);
    CentralController c(d);
    c.set_nominal(0.0, 0.0, d.sys.v_phase_peak());
    CentralMeasurements m;
    m.v_lv = 700.0;
    m.v_abc = balanced(0.0, d.sys.v_phase_peak());
    const auto first = c.step(0.0, m, false);
    const auto second = c.step(c.dt(), m, false);
    CHECK(second.p_g_ref > first.p_g_ref);
    CHECK(second.p_g_ref > 0.0);
    CHECK(first.module_duty.size() == 18);
}
