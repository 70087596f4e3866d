#include "sstsim/plant.hpp"

#include <algorithm>
#include <cmath>

namespace sstsim::plant {

namespace {

double law_scale(PhaseLaw law) { return law == PhaseLaw::PerUnit ? 1.0 : kPi; }

double clamp_phase(double phi, const SpmParams& p) {
    const double lim = p.phase_limit();
    return std::clamp(phi, -lim, lim);
}

}  // namespace

double phase_shape(double phi, PhaseLaw law) { return phi * (1.0 - std::abs(phi) / law_scale(law)); }

double phase_shape_slope(double phi, PhaseLaw law) { return 1.0 - 2.0 * std::abs(phi) / law_scale(law); }

double dab_power_coefficient(double v_lv, double v_mv, const SpmParams& p) {
    return p.n_turns * v_lv * v_mv / (kTwoPi * p.f_s1 * p.l_leak);
}

double dab_power(double phi, double v_lv, double v_mv, const SpmParams& p) {
    return dab_power_coefficient(v_lv, v_mv, p) * phase_shape(clamp_phase(phi, p), p.phase_law);
}

double phase_for_power(double power, double v_lv, double v_mv, const SpmParams& p) {
    const double k = dab_power_coefficient(v_lv, v_mv, p);
    const double lim = p.phase_limit();
    if (k <= 0.0) return 0.0;
    // phi (1 - |phi|/a) = x  =>  |phi| = (a - sqrt(a^2 - 4 a |x|)) / 2
    const double a = law_scale(p.phase_law);
    const double x = std::abs(power) / k;
    const double disc = a * a - 4.0 * a * x;
    const double mag = disc <= 0.0 ? lim : 0.5 * (a - std::sqrt(disc));
    return std::copysign(std::min(mag, lim), power);
}

double dab_mv_current(double phi, double v_lv, const SpmParams& p) {
    return dab_power(phi, v_lv, 1.0, p);
}

double dab_lv_current(double phi, double v_mv, const SpmParams& p) {
    return dab_power(phi, 1.0, v_mv, p);
}

MvdcRate spm_derivative(const SpmPlantState& s, const SpmParams& p, double i_line, double bleed_r) {
    const double p_a = s.m_afe * s.v_mv * i_line;
    const double p_bleed = bleed_r > 0.0 ? s.v_mv * s.v_mv / bleed_r : 0.0;
    MvdcRate r;
    r.de_dt = p_a - s.p_dab - p_bleed;
    if (s.v_mv < 1.0) {
        r.energy_form = true;
        return r;
    }
    r.dv_dt = r.de_dt / (p.c_mv * s.v_mv);
    return r;
}

double phase_stack_voltage(std::span<const SpmPlantState> states) {
    double v = 0.0;
    for (const auto& s : states) v += s.m_afe * s.v_mv;
    return v;
}

double diode_stack_voltage(double v_source, double i_line, double v_stack_total) {
    if (i_line > 0.0) return v_stack_total;
    if (i_line < 0.0) return -v_stack_total;
    return std::clamp(v_source, -v_stack_total, v_stack_total);
}

Abc grid_source_voltages(double theta, const SystemParams& sys) {
    const double amp = sys.v_phase_peak();
    return {amp * std::cos(theta), amp * std::cos(theta - kTwoPi / 3.0),
            amp * std::cos(theta + kTwoPi / 3.0)};
}

GridDerivative grid_derivative(const GridPlantState& g, const Abc& stack_v, const SystemParams& sys,
                               double i_dab_lv_total) {
    GridDerivative d;
    if (g.breaker_closed) {
        Abc drive{};
        for (int k = 0; k < 3; ++k) drive[k] = g.v_phase[k] - stack_v[k];
        const double v_n = (drive[0] + drive[1] + drive[2]) / 3.0;
        for (int k = 0; k < 3; ++k) d.di_dt[k] = (drive[k] - v_n) / sys.l_filter;
    }
    d.dv_lv_dt = (i_dab_lv_total + precharge_current(g, sys) - g.i_lv) / sys.c_lv;
    return d;
}

double precharge_current(const GridPlantState& g, const SystemParams& sys) {
    if (!g.precharge_active) return 0.0;
    const double i = (sys.precharge_v_target - g.v_lv) / sys.precharge_r;
    return std::clamp(i, 0.0, sys.precharge_i_limit);
}

}  // namespace sstsim::plant
