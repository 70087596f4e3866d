#pragma once

#include <complex>
#include <cstddef>

#include "sstsim/discrete.hpp"
#include "sstsim/params.hpp"

// Fully decentralized MVDC voltage controller of one module. The only inputs
// are this module's own MVDC bus voltage (through its sensor model) and the
// locally measured LVDC bus voltage; nothing here can see another module.
namespace sstsim::dab {

/// Snapshot of the controller's internal state.
struct DabControllerState {
    double ref_filter_state = 0.0;  // V, filtered K_v * v_lv
    double integ = 0.0;             // integral of the error, V*s / t_imv
    double res_x1 = 0.0;            // resonator input history
    double res_y1 = 0.0;            // resonator output history
    double sensor_filter_state = 0.0;
    double phi_out = 0.0;   // value returned by the last step
    double last_phi = 0.0;  // computed value waiting in the one-sample delay
    bool saturated = false;
};

class DabController {
public:
    /// `phase_limit` is the symmetric saturation bound of the phase command.
    DabController(const DabGains& gains, double phase_limit, bool resonant_enabled = true);

    /// Reference generation: v*_mv = K_v * H_ref(s) * v_lv.
    double mv_reference(double v_lv_meas);

    /// Sensor model: low-pass at omega_vs then a transport delay of
    /// round(t_vs / t_s1) samples.
    double sense_mv(double v_mv_true);

    /// PIR compensator on err = v_mv_sensed - v*_mv. Output saturated to
    /// +/- phase_limit; integral and resonant states hold when the error
    /// would drive the output further into saturation.
    double pir_step(double err);

    /// One sampling period: sense, reference, compensate. Returns the phase
    /// computed on the previous call (one-sample computation delay).
    double step(double v_mv_true, double v_lv_meas);

    /// Runs sensor and reference filters without regulating (MV bridge off).
    void track(double v_mv_true, double v_lv_meas);

    /// Clears the compensator and the computation delay, keeps the filters.
    void reset_regulator();

    /// Steady-state initialisation at the given operating point.
    void preset(double v_mv, double v_lv, double phi);

    void set_resonant_enabled(bool on) { resonant_enabled_ = on; }
    bool resonant_enabled() const { return resonant_enabled_; }

    /// Additive offset on v*_mv (small-signal injection).
    void set_reference_offset(double volts) { ref_offset_ = volts; }

    /// Local readiness for the monitoring channel: regulating with
    /// |v_mv_sensed - v*_mv| < 2 % of v*_mv for 20 ms.
    bool ready() const { return ready_; }

    DabControllerState state() const;
    double last_reference() const { return last_ref_; }
    double last_sensed() const { return last_sensed_; }
    double phase_limit() const { return phase_limit_; }
    const DabGains& gains() const { return gains_; }

    /// Discrete PIR response K_pmv [1 + I(z) + R(z) / t_rmv] at f_hz.
    std::complex<double> pir_response(double f_hz) const;

    static std::size_t delay_samples(const DabGains& g);

private:
    DabGains gains_;
    double phase_limit_;
    bool resonant_enabled_;
    double ref_offset_ = 0.0;

    discrete::TustinLowPass ref_filter_;
    discrete::MatchedLowPass sensor_filter_;
    discrete::DelayLine sensor_delay_;
    discrete::Biquad resonator_;

    double integ_ = 0.0;
    double err_prev_ = 0.0;
    double phi_pending_ = 0.0;
    double phi_out_ = 0.0;
    bool saturated_ = false;

    double last_ref_ = 0.0;
    double last_sensed_ = 0.0;
    int ready_count_ = 0;
    bool ready_ = false;
};

}  // namespace sstsim::dab
