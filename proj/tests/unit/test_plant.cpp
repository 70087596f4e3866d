#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sstsim/plant.hpp"

using namespace sstsim;
using namespace sstsim::plant;

namespace {

SpmParams per_unit() {
    SpmParams p;
    p.phase_law = PhaseLaw::PerUnit;
    return p;
}

}  // namespace

TEST_CASE("dab power, per-unit law") {
    const SpmParams p = per_unit();
    const double k = p.n_turns * p.v_lv_nom * p.v_mv_nom / (2.0 * M_PI * p.f_s1 * p.l_leak);
    CHECK(k == doctest::Approx(281.0e3).epsilon(1e-3));
    CHECK(dab_power_coefficient(p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(k));

    CHECK(dab_power(0.0, p.v_lv_nom, p.v_mv_nom, p) == 0.0);
    CHECK(dab_power(0.2717, p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(55.6e3).epsilon(1e-3));
    CHECK(dab_power(0.5, p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(70.26e3).epsilon(1e-3));

    // quadratic back-solve of phi (1 - phi) = P / k
    const double phi = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * 55.6e3 / k));
    CHECK(phi == doctest::Approx(0.2717).epsilon(1e-3));
    CHECK(phase_for_power(55.6e3, p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(phi).epsilon(1e-9));
}

TEST_CASE("dab power is odd and peaks at the phase limit (property)") {
    std::mt19937_64 rng(3);
    for (PhaseLaw law : {PhaseLaw::PerUnit, PhaseLaw::Radian}) {
        SpmParams p;
        p.phase_law = law;
        const double lim = p.phase_limit();
        const double p_max = dab_power(lim, p.v_lv_nom, p.v_mv_nom, p);
        std::uniform_real_distribution<double> phi_d(-lim, lim);
        std::uniform_real_distribution<double> v_d(100.0, 3000.0);
        for (int i = 0; i < 400; ++i) {
            const double phi = phi_d(rng);
            const double vl = v_d(rng) / 4.0, vm = v_d(rng);
            CHECK(dab_power(-phi, vl, vm, p) == doctest::Approx(-dab_power(phi, vl, vm, p)));
            CHECK(std::abs(dab_power(phi, p.v_lv_nom, p.v_mv_nom, p)) <= p_max * (1 + 1e-12));
            // beyond the limit it clamps
            CHECK(dab_power(lim * 1.5, vl, vm, p) == doctest::Approx(dab_power(lim, vl, vm, p)));
            // currents reproduce power
            CHECK(dab_mv_current(phi, vl, p) * vm == doctest::Approx(dab_power(phi, vl, vm, p)));
            CHECK(dab_lv_current(phi, vm, p) * vl == doctest::Approx(dab_power(phi, vl, vm, p)));
        }
        // radian and per-unit laws share the small-signal slope
        CHECK(phase_shape_slope(0.0, law) == doctest::Approx(1.0));
    }
}

TEST_CASE("phase_for_power inverts dab_power (property)") {
    std::mt19937_64 rng(5);
    SpmParams p;
    std::uniform_real_distribution<double> frac(-0.99, 0.99);
    const double p_max = dab_power(p.phase_limit(), p.v_lv_nom, p.v_mv_nom, p);
    for (int i = 0; i < 300; ++i) {
        const double pw = frac(rng) * p_max;
        const double phi = phase_for_power(pw, p.v_lv_nom, p.v_mv_nom, p);
        CHECK(std::abs(phi) <= p.phase_limit());
        CHECK(dab_power(phi, p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(pw).epsilon(1e-9));
    }
    CHECK(phase_for_power(2.0 * p_max, p.v_lv_nom, p.v_mv_nom, p) == doctest::Approx(p.phase_limit()));
}

TEST_CASE("mvdc bus derivative") {
    const SpmParams p;
    SUBCASE("balanced powers") {
        SpmPlantState s{2150.0, 0.0, 30e3, 0.5, 0.0};
        const double i_line = 30e3 / (0.5 * 2150.0);
        CHECK(spm_derivative(s, p, i_line).dv_dt == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("rated AFE power, DAB idle") {
        SpmPlantState s{2150.0, 0.0, 0.0, 1.0, 0.0};
        const double i_line = 55.6e3 / 2150.0;
        CHECK(spm_derivative(s, p, i_line).dv_dt == doctest::Approx(96.5e3).epsilon(1e-3));
    }
    SUBCASE("bleed resistor") {
        SpmPlantState s{2150.0, 0.0, 0.0, 0.0, 0.0};
        const double r = 2150.0 * 2150.0 / 700.0;
        CHECK(spm_derivative(s, p, 0.0, r).dv_dt == doctest::Approx(-1.215e3).epsilon(1e-3));
        CHECK(spm_derivative(s, p, 0.0, 0.0).dv_dt == 0.0);
    }
    SUBCASE("energy form below 1 V") {
        SpmPlantState s{0.0, 0.0, -1e3, 0.0, 0.0};
        const auto r = spm_derivative(s, p, 0.0);
        CHECK(r.energy_form);
        CHECK(r.de_dt == doctest::Approx(1e3));
    }
}

TEST_CASE("phase stack voltage") {
    std::vector<SpmPlantState> st(6);
    for (auto& s : st) s.v_mv = 2150.0;
    CHECK(phase_stack_voltage(st) == 0.0);
    for (auto& s : st) s.m_afe = 1.0;
    CHECK(phase_stack_voltage(st) == doctest::Approx(12.9e3));
    for (std::size_t i = 0; i < st.size(); ++i) st[i].m_afe = (i % 2) ? -1.0 : 1.0;
    CHECK(phase_stack_voltage(st) == doctest::Approx(0.0));

    // order of modules is irrelevant
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> m(-1.0, 1.0), v(1800.0, 2400.0);
    for (int trial = 0; trial < 50; ++trial) {
        for (auto& s : st) {
            s.m_afe = m(rng);
            s.v_mv = v(rng);
        }
        const double ref = phase_stack_voltage(st);
        auto perm = st;
        std::shuffle(perm.begin(), perm.end(), rng);
        CHECK(phase_stack_voltage(perm) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("grid and LVDC node") {
    const SystemParams sys;
    GridPlantState g;
    g.breaker_closed = true;
    g.v_phase = grid_source_voltages(0.3, sys);
    const double amp = std::sqrt(2.0) * sys.v_grid_ll / std::sqrt(3.0);
    CHECK(g.v_phase[0] == doctest::Approx(amp * std::cos(0.3)));
    CHECK(g.v_phase[0] + g.v_phase[1] + g.v_phase[2] == doctest::Approx(0.0).epsilon(1e-9));

    SUBCASE("stack matches source") {
        const auto d = grid_derivative(g, g.v_phase, sys, 0.0);
        for (double x : d.di_dt) CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("breaker open keeps currents at zero") {
        g.breaker_closed = false;
        const auto d = grid_derivative(g, {0.0, 0.0, 0.0}, sys, 0.0);
        for (double x : d.di_dt) CHECK(x == 0.0);
    }
    SUBCASE("full load draws 1 MW") {
        g.v_lv = 750.0;
        g.i_lv = 1333.3;
        CHECK(g.v_lv * g.i_lv == doctest::Approx(1e6).epsilon(1e-4));
        const auto d = grid_derivative(g, g.v_phase, sys, 0.0);
        CHECK(d.dv_lv_dt == doctest::Approx(-1333.3 / sys.c_lv));
        const auto bal = grid_derivative(g, g.v_phase, sys, 1333.3);
        CHECK(bal.dv_lv_dt == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("precharge source") {
    const SystemParams sys;
    GridPlantState g;
    g.precharge_active = true;
    g.v_lv = 0.0;
    CHECK(precharge_current(g, sys) == doctest::Approx(50.0));
    g.v_lv = 740.0;
    CHECK(precharge_current(g, sys) == doctest::Approx(10.0));
    g.v_lv = 750.0;
    CHECK(precharge_current(g, sys) == 0.0);
    g.v_lv = 760.0;
    CHECK(precharge_current(g, sys) == 0.0);
    g.precharge_active = false;
    g.v_lv = 0.0;
    CHECK(precharge_current(g, sys) == 0.0);
}

TEST_CASE("diode stack") {
    CHECK(diode_stack_voltage(5000.0, 0.0, 12900.0) == doctest::Approx(5000.0));
    CHECK(diode_stack_voltage(15000.0, 1.0, 12900.0) == doctest::Approx(12900.0));
    CHECK(diode_stack_voltage(-15000.0, -1.0, 12900.0) == doctest::Approx(-12900.0));
}
