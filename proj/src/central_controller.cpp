#include "sstsim/central_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sstsim::central {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kPllZeta = 0.7071067811865476;
// -3 dB bandwidth of a zeta = 0.707 PI-type second-order loop, in units of omega_n:
// sqrt(1 + 2 z^2 + sqrt((1 + 2 z^2)^2 + 1)) = sqrt(2 + sqrt(5)).
const double kPllBwPerOmegaN = std::sqrt(2.0 + std::sqrt(5.0));
// Closed-loop settling time constant of the current-loop resonant term.
constexpr double kResonantTau = 10e-3;
// Low-discrepancy carrier step for sampling the modulating bridge's word.
constexpr double kCarrierStep = 0.6180339887498949;

double wrap_angle(double th) {
    th = std::fmod(th, kTwoPi);
    return th < 0.0 ? th + kTwoPi : th;
}

}  // namespace

AlphaBeta clarke(const Abc& abc) {
    return {(2.0 / 3.0) * (abc[0] - 0.5 * abc[1] - 0.5 * abc[2]), (abc[1] - abc[2]) / kSqrt3};
}

Abc inverse_clarke(const AlphaBeta& ab) {
    return {ab.alpha, -0.5 * ab.alpha + 0.5 * kSqrt3 * ab.beta, -0.5 * ab.alpha - 0.5 * kSqrt3 * ab.beta};
}

// ---------------------------------------------------------------------------

Pll::Pll(double omega_0, double bw_hz, double dt, double v_nominal_peak)
    : omega_0_(omega_0), dt_(dt), v_min_(0.1 * v_nominal_peak), amp_filter_(kTwoPi * 100.0, dt) {
    const double omega_n = kTwoPi * bw_hz / kPllBwPerOmegaN;
    kp_ = 2.0 * kPllZeta * omega_n;
    ki_ = omega_n * omega_n;
    st_.omega_hat = omega_0_;
}

double Pll::step(const Abc& v_abc) {
    const AlphaBeta v = clarke(v_abc);
    const double amp = std::hypot(v.alpha, v.beta);
    st_.v_amp = amp_filter_.step(amp);
    if (amp < v_min_) {
        st_.omega_hat = omega_0_;
    } else {
        const double e = (-v.alpha * std::sin(st_.theta_hat) + v.beta * std::cos(st_.theta_hat)) / amp;
        st_.integ += ki_ * e * dt_;
        st_.omega_hat = omega_0_ + kp_ * e + st_.integ;
    }
    const double next = st_.theta_hat + st_.omega_hat * dt_;
    if (next >= kTwoPi) ++cycles_;
    st_.theta_hat = wrap_angle(next);
    return st_.theta_hat;
}

void Pll::lock_to(double theta, double amplitude) {
    st_.theta_hat = wrap_angle(theta);
    st_.omega_hat = omega_0_;
    st_.integ = 0.0;
    st_.v_amp = amplitude;
    amp_filter_.preset(amplitude);
}

// ---------------------------------------------------------------------------

LvdcRegulator::LvdcRegulator(double v_ref, double bw_hz, double c_equivalent, double p_limit, double dt)
    : v_ref_(v_ref), p_limit_(p_limit), dt_(dt) {
    const double wc = kTwoPi * bw_hz;
    kp_ = wc * c_equivalent * v_ref;
    ki_ = kp_ * wc / 5.0;
}

double LvdcRegulator::step(double v_lv_meas, double i_lv_meas) {
    const double e = v_ref_ - v_lv_meas;
    const double ff = v_lv_meas * i_lv_meas;
    const double integ_next = integ_ + ki_ * e * dt_;
    const double p = kp_ * e + integ_next + ff;
    const bool winding = (p > p_limit_ && e > 0.0) || (p < -p_limit_ && e < 0.0);
    if (!winding) integ_ = integ_next;
    return std::clamp(p, -p_limit_, p_limit_);
}

void LvdcRegulator::reset() { integ_ = 0.0; }

AlphaBeta current_refs(double theta, double p_ref, double q_ref, double v_amp, double v_amp_min) {
    if (v_amp < v_amp_min || v_amp <= 0.0) return {};
    const double g = 2.0 / (3.0 * v_amp);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {g * (p_ref * c + q_ref * s), g * (p_ref * s - q_ref * c)};
}

// ---------------------------------------------------------------------------

CurrentController CurrentController::tuned(double l_filter, double omega_0, double bw_hz, double dt) {
    const double kp = tune_kp(l_filter, omega_0, bw_hz, dt);
    return {kp, 2.0 * kp / kResonantTau, omega_0, dt};
}

CurrentController::CurrentController(double kp, double kr, double omega_0, double dt)
    : kp_(kp),
      kr_(kr),
      omega_0_(omega_0),
      dt_(dt),
      res_alpha_(discrete::prewarped_ideal_resonator(omega_0, dt)),
      res_beta_(discrete::prewarped_ideal_resonator(omega_0, dt)) {}

AlphaBeta CurrentController::step(const AlphaBeta& i_ref, const AlphaBeta& i_meas, const AlphaBeta& v_ff) {
    const double ea = i_ref.alpha - i_meas.alpha;
    const double eb = i_ref.beta - i_meas.beta;
    const double ua = kp_ * ea + kr_ * res_alpha_.step(ea);
    const double ub = kp_ * eb + kr_ * res_beta_.step(eb);
    return {v_ff.alpha - ua, v_ff.beta - ub};
}

void CurrentController::reset() {
    res_alpha_.reset();
    res_beta_.reset();
}

std::complex<double> CurrentController::closed_loop(double f_hz, double l_filter) const {
    const auto z = discrete::unit_circle(f_hz, dt_);
    const auto ctrl = kp_ + kr_ * res_alpha_.coeffs().response(f_hz, dt_);
    const auto loop = ctrl * (dt_ / l_filter) / (z - 1.0) / z;
    return loop / (1.0 + loop);
}

double CurrentController::bandwidth(double kp, double kr, double omega_0, double l_filter, double dt) {
    const CurrentController cc(kp, kr, omega_0, dt);
    const double target = 1.0 / std::sqrt(2.0);
    const double f_max = 0.45 / dt;
    const int points = 4000;
    double f_prev = 1.0;
    for (int k = 1; k <= points; ++k) {
        const double f = std::pow(f_max, static_cast<double>(k) / points);
        if (std::abs(cc.closed_loop(f, l_filter)) < target) {
            double lo = f_prev;
            double hi = f;
            for (int it = 0; it < 60; ++it) {
                const double mid = std::sqrt(lo * hi);
                (std::abs(cc.closed_loop(mid, l_filter)) < target ? hi : lo) = mid;
            }
            return std::sqrt(lo * hi);
        }
        f_prev = f;
    }
    return f_max;
}

double CurrentController::tune_kp(double l_filter, double omega_0, double bw_hz, double dt) {
    // kp dt / L < 1 keeps the delayed discrete loop stable.
    double lo = 1e-3 * l_filter / dt;
    double hi = 0.9 * l_filter / dt;
    auto bw = [&](double kp) { return bandwidth(kp, 2.0 * kp / kResonantTau, omega_0, l_filter, dt); };
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bw(mid) < bw_hz ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

ModulationResult multilevel_modulate(double v_cmd, double v_mv_nominal, int n_modules, int rotation,
                                     double carrier) {
    const auto n = static_cast<std::size_t>(std::max(n_modules, 0));
    ModulationResult r{std::vector<double>(n, 0.0), std::vector<GateWord>(n, GateWord::Zero), false};
    if (n == 0 || v_mv_nominal <= 0.0) return r;

    double levels = std::abs(v_cmd) / v_mv_nominal;
    if (levels > static_cast<double>(n)) {
        levels = static_cast<double>(n);
        r.saturated = true;
    }
    const double sign = v_cmd < 0.0 ? -1.0 : 1.0;
    const GateWord active = v_cmd < 0.0 ? GateWord::Negative : GateWord::Positive;
    const auto full = static_cast<std::size_t>(std::floor(levels));
    const double frac = levels - static_cast<double>(full);
    const auto rot = static_cast<std::size_t>(((rotation % n_modules) + n_modules) % n_modules);

    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t k = (pos + rot) % n;
        if (pos < full) {
            r.duty[k] = sign;
            r.words[k] = active;
        } else if (pos == full && frac > 0.0) {
            r.duty[k] = sign * frac;
            r.words[k] = frac > carrier ? active : GateWord::Zero;
        }
    }
    return r;
}

double interleaved_duty(double v_cmd, double v_mv_est, int n_modules) {
    if (v_mv_est <= 0.0 || n_modules <= 0) return 0.0;
    return std::clamp(v_cmd / (n_modules * v_mv_est), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

const char* to_string(StartupPhase p) {
    switch (p) {
        case StartupPhase::Idle: return "Idle";
        case StartupPhase::Precharge: return "Precharge";
        case StartupPhase::DutyRamp: return "DutyRamp";
        case StartupPhase::MvdcRegulate: return "MvdcRegulate";
        case StartupPhase::BreakerClose: return "BreakerClose";
        case StartupPhase::Nominal: return "Nominal";
    }
    return "?";
}

StartupSequencer::StartupSequencer(double v_lv_ref, StartupTiming timing)
    : v_lv_ref_(v_lv_ref), timing_(timing) {}

void StartupSequencer::enter(StartupPhase p, double t) {
    phase_ = p;
    entry_ = t;
}

void StartupSequencer::start(double t) {
    aborted_ = false;
    ready_ = false;
    enter(StartupPhase::Precharge, t);
}

void StartupSequencer::force_nominal(double t) {
    aborted_ = false;
    ready_ = true;
    enter(StartupPhase::Nominal, t);
}

StartupCommands StartupSequencer::step(double t, double v_lv_meas, bool ready_received) {
    const double age = t - entry_;
    const auto abort = [&] {
        aborted_ = true;
        enter(StartupPhase::Idle, t);
    };

    switch (phase_) {
        case StartupPhase::Idle:
            break;
        case StartupPhase::Precharge:
            if (v_lv_meas >= timing_.precharge_fraction * v_lv_ref_) {
                enter(StartupPhase::DutyRamp, t);
            } else if (age >= timing_.timeout) {
                abort();
            }
            break;
        case StartupPhase::DutyRamp:
            if (age >= timing_.ramp + timing_.ramp_hold) {
                ready_ = false;
                enter(StartupPhase::MvdcRegulate, t);
            } else if (age >= timing_.timeout) {
                abort();
            }
            break;
        case StartupPhase::MvdcRegulate:
            ready_ = ready_ || ready_received;
            if (ready_) {
                enter(StartupPhase::BreakerClose, t);
            } else if (age >= timing_.timeout) {
                abort();
            }
            break;
        case StartupPhase::BreakerClose:
            if (age >= timing_.breaker_hold + timing_.nominal_delay) enter(StartupPhase::Nominal, t);
            break;
        case StartupPhase::Nominal:
            break;
    }

    StartupCommands c;
    c.phase = phase_;
    c.aborted = aborted_;
    const double now_age = t - entry_;
    switch (phase_) {
        case StartupPhase::Idle:
            break;
        case StartupPhase::Precharge:
            c.precharge_connect = true;
            break;
        case StartupPhase::DutyRamp:
            c.precharge_connect = true;
            c.dab_lv_enable = true;
            c.dab_lv_duty = 0.5 * std::clamp(now_age / timing_.ramp, 0.0, 1.0);
            break;
        case StartupPhase::MvdcRegulate:
            c.precharge_connect = true;
            c.dab_lv_enable = true;
            c.dab_lv_duty = 0.5;
            c.dab_regulate = true;
            break;
        case StartupPhase::BreakerClose:
            c.dab_lv_enable = true;
            c.dab_lv_duty = 0.5;
            c.dab_regulate = true;
            c.breaker_close = now_age >= timing_.breaker_hold;
            break;
        case StartupPhase::Nominal:
            c.dab_lv_enable = true;
            c.dab_lv_duty = 0.5;
            c.dab_regulate = true;
            c.breaker_close = true;
            c.afe_enable = true;
            c.lvdc_enable = true;
            break;
    }
    return c;
}

MonitoringChannel::MonitoringChannel(double latency) : latency_(latency) {}

void MonitoringChannel::send(double t_sent) {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(t_sent);
}

bool MonitoringChannel::poll(double t_now) {
    std::lock_guard<std::mutex> lock(mu_);
    bool delivered = false;
    while (!queue_.empty() && queue_.front() + latency_ <= t_now + 1e-12) {
        queue_.pop_front();
        delivered = true;
    }
    return delivered;
}

// ---------------------------------------------------------------------------

const char* to_string(ModulationMode m) { return m == ModulationMode::Interleaved ? "interleaved" : "nearest_level"; }

ModulationMode modulation_mode_from_string(const std::string& s) {
    if (s == "interleaved") return ModulationMode::Interleaved;
    if (s == "nearest_level") return ModulationMode::NearestLevel;
    throw ConfigError("modulation must be \"interleaved\" or \"nearest_level\" (got \"" + s + "\")");
}

double equivalent_lv_capacitance(const SystemParams& sys, double c_mv, double k_v) {
    return sys.c_lv + sys.n_modules() * c_mv * k_v * k_v;
}

CentralController::CentralController(const CentralDesign& design)
    : d_(design),
      dt_(1.0 / design.sys.f_c),
      n_blocks_(design.sys.n_blocks),
      pll_(design.sys.omega_0, design.sys.pll_bw_hz, dt_, design.sys.v_phase_peak()),
      lvdc_(design.sys.v_lv_ref, design.sys.lvdc_bw_hz, design.c_equivalent, design.sys.s_rated, dt_),
      cc_(CurrentController::tuned(design.sys.l_filter, design.sys.omega_0, design.sys.cc_bw_hz, dt_)),
      seq_(design.sys.v_lv_ref, design.timing) {
    const auto n = static_cast<std::size_t>(design.sys.n_modules());
    pending_.module_duty.assign(n, 0.0);
    pending_.gate_words.assign(n, GateWord::Zero);
}

void CentralController::start_sequence(double t) { seq_.start(t); }

void CentralController::set_nominal(double t, double theta, double v_amp) {
    seq_.force_nominal(t);
    pll_.lock_to(theta, v_amp);
    pending_.cmds = seq_.step(t, d_.sys.v_lv_ref, true);

    // Prime the delayed output with the feedforward for the first period.
    const double th = theta + d_.sys.omega_0 * 0.5 * dt_;
    const double v_mv_est = d_.k_v * d_.sys.v_lv_ref;
    for (int ph = 0; ph < 3; ++ph) {
        const double v = v_amp * std::cos(th - ph * kTwoPi / 3.0);
        pending_.v_cmd[ph] = v;
        const auto nl = multilevel_modulate(v, v_mv_est, n_blocks_);
        const double share = interleaved_duty(v, v_mv_est, n_blocks_);
        for (int b = 0; b < n_blocks_; ++b) {
            const auto k = static_cast<std::size_t>(ph * n_blocks_ + b);
            pending_.gate_words[k] = nl.words[static_cast<std::size_t>(b)];
            pending_.module_duty[k] =
                d_.modulation == ModulationMode::Interleaved ? share : nl.duty[static_cast<std::size_t>(b)];
        }
    }
}

CentralOutputs CentralController::step(double t, const CentralMeasurements& m, bool ready_received) {
    const auto n = static_cast<std::size_t>(d_.sys.n_modules());
    CentralOutputs now;
    now.module_duty.assign(n, 0.0);
    now.gate_words.assign(n, GateWord::Zero);
    now.q_g_ref = q_ref_;

    pll_.step(m.v_abc);
    now.cmds = seq_.step(t, m.v_lv, ready_received);

    if (now.cmds.lvdc_enable) {
        now.p_g_ref = lvdc_.step(m.v_lv, m.i_lv);
    } else {
        lvdc_.reset();
    }

    if (now.cmds.afe_enable) {
        const auto& ps = pll_.state();
        const AlphaBeta i_ref =
            current_refs(ps.theta_hat, now.p_g_ref, q_ref_, ps.v_amp, 0.1 * d_.sys.v_phase_peak());
        const AlphaBeta i_meas = clarke(m.i_abc);
        // theta_hat already points one period ahead; the command is held over
        // the period after that, so aim at its middle.
        const double th_ff = ps.theta_hat + ps.omega_hat * 0.5 * dt_;
        const AlphaBeta v_ff{ps.v_amp * std::cos(th_ff), ps.v_amp * std::sin(th_ff)};
        now.v_cmd = inverse_clarke(cc_.step(i_ref, i_meas, v_ff));

        const double v_mv_est = d_.k_v * std::max(m.v_lv, 1.0);
        const int rotation = static_cast<int>(pll_.cycles() % static_cast<std::uint64_t>(n_blocks_));
        const double carrier = std::fmod(static_cast<double>(tick_) * kCarrierStep, 1.0);
        for (int ph = 0; ph < 3; ++ph) {
            const auto nl = multilevel_modulate(now.v_cmd[ph], v_mv_est, n_blocks_, rotation, carrier);
            const double share = interleaved_duty(now.v_cmd[ph], v_mv_est, n_blocks_);
            now.modulation_saturated = now.modulation_saturated || nl.saturated;
            for (int b = 0; b < n_blocks_; ++b) {
                const auto k = static_cast<std::size_t>(ph * n_blocks_ + b);
                now.gate_words[k] = nl.words[static_cast<std::size_t>(b)];
                now.module_duty[k] =
                    d_.modulation == ModulationMode::Interleaved ? share : nl.duty[static_cast<std::size_t>(b)];
            }
        }
    } else {
        cc_.reset();
    }
    ++tick_;

    CentralOutputs out = std::move(pending_);
    pending_ = std::move(now);
    return out;
}

}  // namespace sstsim::central
