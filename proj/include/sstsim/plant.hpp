#pragma once

#include <array>
#include <span>

#include "sstsim/params.hpp"

// Cycle-averaged electrical model of the ISOP converter. All functions are
// pure; the simulation engine owns the state.
namespace sstsim::plant {

using Abc = std::array<double, 3>;

/// One module's MVDC bus and stage powers.
struct SpmPlantState {
    double v_mv = 0.0;   // V
    double p_afe = 0.0;  // W into the MVDC bus from the AFE
    double p_dab = 0.0;  // W from the MVDC bus to the LVDC bus
    double m_afe = 0.0;  // AFE terminal voltage = m_afe * v_mv
    double phi = 0.0;    // DAB phase shift, unit per SpmParams::phase_law
};

struct GridPlantState {
    double theta_grid = 0.0;
    Abc i_phase{};  // A, positive from grid into the converter
    Abc v_phase{};  // V, source phase-to-neutral
    double v_lv = 0.0;
    double i_lv = 0.0;  // load current drawn from the LVDC bus
    bool breaker_closed = false;
    bool precharge_active = false;
};

/// phi * (1 - |phi|) or phi * (1 - |phi|/pi), odd in phi.
double phase_shape(double phi, PhaseLaw law);

/// d(phase_shape)/d(phi), i.e. the loaded-operating-point gain factor.
double phase_shape_slope(double phi, PhaseLaw law);

/// Small-signal coefficient n * v_lv * v_mv / (2 pi f_s1 L).
double dab_power_coefficient(double v_lv, double v_mv, const SpmParams& p);

/// Averaged DAB power, positive MV -> LV. Phase clamped to the law's range.
double dab_power(double phi, double v_lv, double v_mv, const SpmParams& p);

/// Smallest non-negative-slope phase that transfers `power`, or the limit
/// when the request exceeds what the law can deliver.
double phase_for_power(double power, double v_lv, double v_mv, const SpmParams& p);

/// DAB current on the MV side, P_d / v_mv, regular at v_mv = 0.
double dab_mv_current(double phi, double v_lv, const SpmParams& p);

/// DAB current on the LV side, P_d / v_lv, regular at v_lv = 0.
double dab_lv_current(double phi, double v_mv, const SpmParams& p);

/// MVDC bus rate of change. Above 1 V dv_dt is valid; below it callers must
/// integrate de_dt (stored energy) and recover v = sqrt(2E/C).
struct MvdcRate {
    double dv_dt = 0.0;
    double de_dt = 0.0;
    bool energy_form = false;
};

/// (P_a - P_d - P_bleed) / (C v) with P_a = m_afe * v_mv * i_line and
/// P_d = s.p_dab. bleed_r <= 0 disables the bleed resistor.
MvdcRate spm_derivative(const SpmPlantState& s, const SpmParams& p, double i_line,
                        double bleed_r = 0.0);

/// Sum of m_afe * v_mv over one phase's series stack.
double phase_stack_voltage(std::span<const SpmPlantState> states);

/// Terminal voltage of a gating-disabled stack (anti-parallel diodes).
/// Blocks while |v_source| <= v_stack_total and the current is zero,
/// otherwise clamps to +/- v_stack_total in the conduction direction.
double diode_stack_voltage(double v_source, double i_line, double v_stack_total);

/// Balanced source: sqrt(2) * v_ll / sqrt(3) * cos(theta - 2 pi k / 3).
Abc grid_source_voltages(double theta, const SystemParams& sys);

struct GridDerivative {
    Abc di_dt{};
    double dv_lv_dt = 0.0;
};

/// Filter inductor currents with a floating star point, and the LVDC node
/// c_lv dv/dt = i_dab_lv_total + i_precharge - i_lv.
GridDerivative grid_derivative(const GridPlantState& g, const Abc& stack_v, const SystemParams& sys,
                               double i_dab_lv_total);

/// Current-limited pre-charge source into the LVDC bus; zero when inactive
/// and never negative (rectifier output).
double precharge_current(const GridPlantState& g, const SystemParams& sys);

}  // namespace sstsim::plant
