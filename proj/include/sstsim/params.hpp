#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sstsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Thrown for malformed configuration or a violated parameter invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unit of the DAB phase shift and the matching averaged power law.
///
/// PerUnit:  P = k * phi * (1 - |phi|),      |phi| <= 0.5
/// Radian:   P = k * phi * (1 - |phi| / pi), |phi| <= pi / 2
///
/// Both share the small-signal slope k = n * v_lv * v_mv / (2 pi f_s L).
enum class PhaseLaw { PerUnit, Radian };

const char* to_string(PhaseLaw law);
PhaseLaw phase_law_from_string(const std::string& s);

/// Single-phase module constants. Defaults are the nominal module design.
struct SpmParams {
    double v_mv_nom = 2150.0;   // V, MVDC bus
    double v_ac_nom = 1270.0;   // V rms, module AC terminal
    double v_lv_nom = 750.0;    // V
    double p_rated = 55.6e3;    // W
    double q_rated = 25e3;      // VAR
    double f_s1 = 20e3;         // Hz, DAB switching and sampling
    double f_s2 = 5e3;          // Hz, AFE device switching
    double c_mv = 268e-6;       // F
    double l_leak = 137e-6;     // H, referred to the MV side
    double n_turns = 3.0;
    double c_b1 = 6.8e-6;       // F
    double c_b2 = 150e-6;       // F
    PhaseLaw phase_law = PhaseLaw::Radian;

    /// Largest |phi| the power law admits (where it peaks).
    double phase_limit() const;
};

/// Converter-level constants and central-controller tuning targets.
struct SystemParams {
    double s_rated = 1.1e6;            // VA
    double p_rated = 1e6;              // W
    double q_rated = 450e3;            // VAR
    double v_grid_ll = 13.2e3;         // V rms line-line
    double omega_0 = kTwoPi * 60.0;    // rad/s
    double v_lv_ref = 750.0;           // V
    int n_blocks = 6;
    double f_c = 10e3;                 // Hz
    double l_filter = 12e-3;           // H per phase
    double c_lv = 60e-3;               // F

    double lvdc_bw_hz = 30.0;
    double pll_bw_hz = 25.0;
    double cc_bw_hz = 400.0;

    double precharge_i_limit = 50.0;   // A
    double precharge_v_target = 750.0; // V
    double precharge_r = 1.0;          // ohm

    int n_modules() const { return 3 * n_blocks; }
    double v_phase_rms() const;
    double v_phase_peak() const;
};

/// Gains of the decentralized MVDC voltage controller.
struct DabGains {
    double k_v = 2150.0 / 750.0;
    double omega_ref = kTwoPi * 130.0;
    double k_pmv = 0.0082;
    double t_imv = 0.01;
    double t_rmv = 0.01;
    double omega_bmv = kPi;
    double omega_vs = kTwoPi * 1e5;
    double t_vs = 77e-6;
    double t_s1 = 1.0 / 20e3;
    double omega_0 = kTwoPi * 60.0;  // resonator sits at 2 * omega_0

    /// Defaults consistent with a module design (k_v and t_s1 follow it).
    static DabGains defaults_for(const SpmParams& spm);
};

/// Per-module component multipliers.
struct ToleranceSpec {
    std::vector<double> l_multipliers;
    std::vector<double> c_mv_multipliers;

    /// All multipliers 1.0.
    static ToleranceSpec nominal(int n_modules);

    /// Ladder linspace(0.91, 1.08, n_modules) on both L and C_MV. Without a
    /// seed the rungs are dealt block-major across the phases (so each phase
    /// group spans the ladder) and C_MV is offset by half the ladder from L.
    /// A seed draws independent permutations for L and C_MV.
    static ToleranceSpec ladder(int n_modules, std::optional<std::uint64_t> seed = std::nullopt);

    bool is_nominal() const;
};

/// Resonance of the leakage inductance with the two blocking capacitors.
double blocking_resonance(const SpmParams& p);

/// Copy of p with l_leak and c_mv scaled by the module's multipliers.
SpmParams apply_tolerances(const SpmParams& p, const ToleranceSpec& t, std::size_t module_index);

void validate(const SpmParams& p);
void validate(const SystemParams& sys);
void validate(const DabGains& g);
void validate(const ToleranceSpec& t, int n_modules);

/// Table cross-checks between system and module ratings (1 % tolerance).
void validate_consistency(const SystemParams& sys, const SpmParams& spm);

}  // namespace sstsim
