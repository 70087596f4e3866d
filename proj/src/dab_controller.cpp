#include "sstsim/dab_controller.hpp"

#include <algorithm>
#include <cmath>

namespace sstsim::dab {

namespace {

constexpr double kReadyBand = 0.02;
constexpr double kReadyHold = 20e-3;

}  // namespace

std::size_t DabController::delay_samples(const DabGains& g) {
    return static_cast<std::size_t>(std::lround(g.t_vs / g.t_s1));
}

DabController::DabController(const DabGains& gains, double phase_limit, bool resonant_enabled)
    : gains_(gains),
      phase_limit_(phase_limit),
      resonant_enabled_(resonant_enabled),
      ref_filter_(gains.omega_ref, gains.t_s1),
      sensor_filter_(gains.omega_vs, gains.t_s1),
      sensor_delay_(delay_samples(gains)),
      resonator_(discrete::prewarped_resonator(gains.omega_bmv, 2.0 * gains.omega_0, gains.t_s1)) {}

double DabController::mv_reference(double v_lv_meas) {
    last_ref_ = ref_filter_.step(gains_.k_v * v_lv_meas) + ref_offset_;
    return last_ref_;
}

double DabController::sense_mv(double v_mv_true) {
    last_sensed_ = sensor_delay_.push(sensor_filter_.step(v_mv_true));
    return last_sensed_;
}

double DabController::pir_step(double err) {
    const double half = gains_.t_s1 / (2.0 * gains_.t_imv);
    const double integ_next = integ_ + half * (err + err_prev_);
    err_prev_ = err;

    const double res = resonant_enabled_ ? resonator_.peek(err) : 0.0;
    const double u = gains_.k_pmv * (err + integ_next + res / gains_.t_rmv);

    const bool high = u > phase_limit_;
    const bool low = u < -phase_limit_;
    const bool winding = (high && err > 0.0) || (low && err < 0.0);
    if (!winding) {
        integ_ = integ_next;
        if (resonant_enabled_) resonator_.commit(err, res);
    }
    saturated_ = high || low;
    return std::clamp(u, -phase_limit_, phase_limit_);
}

double DabController::step(double v_mv_true, double v_lv_meas) {
    const double sensed = sense_mv(v_mv_true);
    const double ref = mv_reference(v_lv_meas);
    const double err = sensed - ref;

    phi_out_ = phi_pending_;
    phi_pending_ = pir_step(err);

    if (ref > 0.0 && std::abs(err) < kReadyBand * ref) {
        ++ready_count_;
    } else {
        ready_count_ = 0;
    }
    ready_ = ready_count_ * gains_.t_s1 >= kReadyHold;
    return phi_out_;
}

void DabController::track(double v_mv_true, double v_lv_meas) {
    sense_mv(v_mv_true);
    mv_reference(v_lv_meas);
    ready_count_ = 0;
    ready_ = false;
}

void DabController::reset_regulator() {
    integ_ = 0.0;
    err_prev_ = 0.0;
    resonator_.reset();
    phi_pending_ = 0.0;
    phi_out_ = 0.0;
    saturated_ = false;
    ready_count_ = 0;
    ready_ = false;
}

void DabController::preset(double v_mv, double v_lv, double phi) {
    ref_filter_.preset(gains_.k_v * v_lv);
    sensor_filter_.preset(v_mv);
    sensor_delay_.fill(v_mv);
    reset_regulator();
    integ_ = phi / gains_.k_pmv;
    phi_pending_ = phi;
    phi_out_ = phi;
    last_ref_ = gains_.k_v * v_lv;
    last_sensed_ = v_mv;
}

DabControllerState DabController::state() const {
    DabControllerState s;
    s.ref_filter_state = ref_filter_.output();
    s.integ = integ_;
    s.res_x1 = resonator_.x1();
    s.res_y1 = resonator_.y1();
    s.sensor_filter_state = sensor_filter_.output();
    s.phi_out = phi_out_;
    s.last_phi = phi_pending_;
    s.saturated = saturated_;
    return s;
}

std::complex<double> DabController::pir_response(double f_hz) const {
    const auto z = discrete::unit_circle(f_hz, gains_.t_s1);
    const double half = gains_.t_s1 / (2.0 * gains_.t_imv);
    std::complex<double> f = 1.0 + half * (z + 1.0) / (z - 1.0);
    if (resonant_enabled_) f += resonator_.coeffs().response(f_hz, gains_.t_s1) / gains_.t_rmv;
    return gains_.k_pmv * f;
}

}  // namespace sstsim::dab
