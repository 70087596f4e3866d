#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sstsim/params.hpp"

// Frequency-domain model of the MVDC voltage loop with exact transport delays.
namespace sstsim::freq {

using Complex = std::complex<double>;

/// Open loop as a complex response plus its continuous (unwrapped) phase.
/// Margins are read off the phase function, so delays never alias.
struct OpenLoop {
    std::function<Complex(double)> eval;
    std::function<double(double)> phase_deg;
};

struct GmvdcOptions {
    bool resonant = true;
    /// Loaded operating point: scales the plant by the slope of the power law
    /// at this phase. Absent means the light-load linearisation.
    std::optional<double> operating_phi;
};

// Individual factors at s = j 2 pi f.
Complex plant_factor(double f_hz, const SpmParams& p, const DabGains& g, const GmvdcOptions& o = {});
Complex pir_continuous(double f_hz, const DabGains& g, bool resonant = true);
Complex sensor_factor(double f_hz, const DabGains& g);
Complex computation_delay(double f_hz, const DabGains& g);

/// Sign-normalised compensated open loop
///   n V_LV / (2 pi f_s1 L C_MV s) * F_PIR(s) * H_vs(s) * exp(-s T_s1).
Complex gmvdc_eval(double f_hz, const SpmParams& p, const DabGains& g, const GmvdcOptions& o = {});
double gmvdc_phase_deg(double f_hz, const SpmParams& p, const DabGains& g, const GmvdcOptions& o = {});
OpenLoop gmvdc_loop(const SpmParams& p, const DabGains& g, const GmvdcOptions& o = {});

/// Reference loop k/s * exp(-s T).
OpenLoop integrator_with_delay(double k, double delay);

struct FreqResponse {
    std::vector<double> freqs;
    std::vector<Complex> values;
    std::vector<double> phase_deg;
    std::optional<double> crossover_hz;
    std::optional<double> phase_margin_deg;
    std::optional<double> gain_margin_db;
    std::optional<double> phase_crossover_hz;
    std::vector<std::string> annotations;
};

/// Log grid from f_lo to f_hi with `per_decade` points per decade.
std::vector<double> log_grid(double f_lo, double f_hi, int per_decade);

FreqResponse sweep(const OpenLoop& loop, double f_lo = 1.0, double f_hi = 10e3, int per_decade = 200);

struct Margins {
    std::optional<double> crossover_hz;
    std::optional<double> phase_margin_deg;
    std::optional<double> gain_margin_db;
    std::optional<double> phase_crossover_hz;
};

/// Crossover from the first downward crossing of |G| = 1, refined by
/// bisection. GM at the first -180 deg crossing above the crossover (below it
/// the PI double integrator can sit asymptotically at -180 deg).
Margins margins(const FreqResponse& resp, const OpenLoop& loop);

/// Sweeps and annotates in one go.
FreqResponse analyse(const OpenLoop& loop, double f_lo = 1.0, double f_hi = 10e3, int per_decade = 200);

struct TimescaleReport {
    double crossover_hz = 0.0;
    double lvdc_bw_hz = 0.0;
    double ratio = 0.0;
    double ref_hz = 0.0;
    double ref_target_hz = 0.0;
    bool pass = false;
    std::vector<std::string> violations;
};

/// Loop separation: crossover >= 10x the LVDC bandwidth and the reference
/// filter corner within 5 % of crossover / 5.
TimescaleReport timescale_audit(double mvdc_crossover_hz, double lvdc_bw_hz, double omega_ref);

struct DiscreteMismatch {
    double max_phase_err_deg = 0.0;
    double max_mag_err_db = 0.0;
    double worst_phase_hz = 0.0;
    double worst_mag_hz = 0.0;
};

/// Compares the sampled PIR realisation with its continuous prototype.
DiscreteMismatch pir_discretisation_error(const DabGains& g, double phase_limit, double f_max_hz,
                                          bool resonant = true, int per_decade = 200);

}  // namespace sstsim::freq
