#pragma once

#include <string_view>
#include <vector>

#include "sstsim/engine.hpp"

namespace sstsim::metrics {

/// Peak-to-peak amplitude of the f_target component over the trailing
/// window (truncated to whole periods), by a single-bin DFT of the
/// mean-removed signal. Throws std::invalid_argument when the window is
/// shorter than five periods or longer than the trace.
double ripple_pp(const std::vector<double>& t, const std::vector<double>& x, double f_target, double window);
double ripple_metric(const sim::Trace& tr, std::string_view column, double f_target, double window);

struct PhaseBalance {
    double vmv_spread = 0.0;    // V, max over time of (max - min) within the phase
    double pdab_spread = 0.0;   // W
};

struct Balance {
    std::vector<PhaseBalance> phases;
    double max_vmv_spread = 0.0;
    double max_pdab_spread = 0.0;
    /// Largest difference between phase-mean v_mv at any instant.
    double max_cross_phase_vmv = 0.0;
};

/// Spreads over frames with t0 <= t <= t1.
Balance balance_metric(const sim::Trace& tr, int n_blocks, double t0, double t1);

struct StepResponse {
    double settle_time = 0.0;    // s after t_step until the signal stays inside the band
    double max_deviation = 0.0;  // largest |x - target| in [t_step, t_end]
    bool settled = false;
};

StepResponse step_response(const sim::Trace& tr, std::string_view column, double t_step, double t_end,
                           double target, double band);

/// Mean of a column over t0 <= t <= t1.
double window_mean(const sim::Trace& tr, std::string_view column, double t0, double t1);

}  // namespace sstsim::metrics
