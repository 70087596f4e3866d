#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "sstsim/discrete.hpp"
#include "sstsim/params.hpp"

// Central (LVDC-side) controller. Its measurements are the LVDC bus voltage
// and load current plus grid voltages and currents; it has no access to any
// module's MVDC bus.
namespace sstsim::central {

using Abc = std::array<double, 3>;

struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;
};

/// Amplitude-invariant Clarke transform.
AlphaBeta clarke(const Abc& abc);
Abc inverse_clarke(const AlphaBeta& ab);

// ---------------------------------------------------------------------------
// PLL

struct PllState {
    double theta_hat = 0.0;
    double omega_hat = 0.0;
    double integ = 0.0;
    double v_amp = 0.0;  // filtered voltage amplitude
};

/// Synchronous-frame PLL on the normalised q-axis voltage. PI gains place a
/// zeta = 0.707 pair whose closed-loop -3 dB bandwidth is `bw_hz`. Below 10 %
/// of `v_nominal_peak` it free-runs at omega_0.
class Pll {
public:
    Pll(double omega_0, double bw_hz, double dt, double v_nominal_peak);

    double step(const Abc& v_abc);
    void lock_to(double theta, double amplitude);

    const PllState& state() const { return st_; }
    double kp() const { return kp_; }
    double ki() const { return ki_; }
    /// Completed electrical cycles of theta_hat since construction.
    std::uint64_t cycles() const { return cycles_; }

private:
    double omega_0_;
    double dt_;
    double v_min_;
    double kp_;
    double ki_;
    discrete::TustinLowPass amp_filter_;
    PllState st_;
    std::uint64_t cycles_ = 0;
};

// ---------------------------------------------------------------------------
// LVDC bus regulator

/// PI on (v*_lv - v_lv) plus load-power feedforward v_lv * i_lv. The design
/// plant is v_lv / P = 1 / (c_equivalent * v_ref * s); the PI crosses over at
/// `bw_hz` with its zero a factor five lower.
class LvdcRegulator {
public:
    LvdcRegulator(double v_ref, double bw_hz, double c_equivalent, double p_limit, double dt);

    double step(double v_lv_meas, double i_lv_meas);
    void reset();

    double kp() const { return kp_; }
    double ki() const { return ki_; }
    double integ() const { return integ_; }
    double v_ref() const { return v_ref_; }

private:
    double v_ref_;
    double kp_;
    double ki_;
    double p_limit_;
    double dt_;
    double integ_ = 0.0;
};

/// Stationary-frame current references that make (3/2)(v_a i_a + v_b i_b)
/// equal p for a grid voltage of amplitude v_amp at angle theta. Power is
/// positive when drawn from the grid. Zero below `v_amp_min`.
AlphaBeta current_refs(double theta, double p_ref, double q_ref, double v_amp, double v_amp_min);

// ---------------------------------------------------------------------------
// Current controller

/// Per-axis proportional + resonant (omega_0) current controller with grid
/// voltage feedforward. The converter voltage command is
///   v_cmd = v_ff - (kp e + kr R(e)),  e = i_ref - i_meas,
/// with i positive from grid into the converter.
class CurrentController {
public:
    CurrentController(double kp, double kr, double omega_0, double dt);

    /// kp is solved so the discrete loop (L filter, ZOH, one-sample delay)
    /// has a closed-loop -3 dB bandwidth of bw_hz; kr = 2 kp / 10 ms.
    static CurrentController tuned(double l_filter, double omega_0, double bw_hz, double dt);

    AlphaBeta step(const AlphaBeta& i_ref, const AlphaBeta& i_meas, const AlphaBeta& v_ff);
    void reset();

    double kp() const { return kp_; }
    double kr() const { return kr_; }

    /// Closed-loop response i / i_ref of the discrete loop at f_hz.
    std::complex<double> closed_loop(double f_hz, double l_filter) const;

    /// -3 dB frequency of the discrete closed loop.
    static double bandwidth(double kp, double kr, double omega_0, double l_filter, double dt);
    static double tune_kp(double l_filter, double omega_0, double bw_hz, double dt);

private:
    double kp_;
    double kr_;
    double omega_0_;
    double dt_;
    discrete::Biquad res_alpha_;
    discrete::Biquad res_beta_;
};

// ---------------------------------------------------------------------------
// Modulation

/// 2-bit AFE bridge state sent over fibre. Code 3 is reserved.
enum class GateWord : std::uint8_t { Zero = 0, Positive = 1, Negative = 2 };

struct ModulationResult {
    std::vector<double> duty;      // per module, in [-1, 1]
    std::vector<GateWord> words;   // per module
    bool saturated = false;
};

/// Nearest-level split of one phase command over n series bridges: the first
/// floor(|v|/v_mv) bridges (after rotating the order by `rotation`) fully on,
/// the next one modulating the remainder. `carrier` in [0, 1) selects the
/// modulating bridge's instantaneous word.
ModulationResult multilevel_modulate(double v_cmd, double v_mv_nominal, int n_modules,
                                     int rotation = 0, double carrier = 0.5);

/// Equal-share (interleaved) averaged duty v_cmd / (n * v_mv_est), clamped.
double interleaved_duty(double v_cmd, double v_mv_est, int n_modules);

// ---------------------------------------------------------------------------
// Start-up

enum class StartupPhase { Idle, Precharge, DutyRamp, MvdcRegulate, BreakerClose, Nominal };

const char* to_string(StartupPhase p);

struct StartupTiming {
    double precharge_fraction = 0.95;  // of v*_lv
    double ramp = 0.5;                 // s, LV-side duty 0 -> 0.5
    double ramp_hold = 0.1;            // s after the ramp before regulating
    double breaker_hold = 0.05;        // s from pre-charge disconnect to closure
    double nominal_delay = 0.02;       // s from closure to nominal
    double timeout = 5.0;              // s per phase
};

struct StartupCommands {
    StartupPhase phase = StartupPhase::Idle;
    bool precharge_connect = false;
    bool breaker_close = false;
    bool dab_lv_enable = false;
    double dab_lv_duty = 0.0;
    bool dab_regulate = false;
    bool afe_enable = false;
    bool lvdc_enable = false;
    bool aborted = false;
};

class StartupSequencer {
public:
    StartupSequencer(double v_lv_ref, StartupTiming timing = {});

    void start(double t);
    void force_nominal(double t);
    StartupCommands step(double t, double v_lv_meas, bool ready_received);

    StartupPhase phase() const { return phase_; }
    double entry_time() const { return entry_; }
    bool aborted() const { return aborted_; }
    const StartupTiming& timing() const { return timing_; }

private:
    void enter(StartupPhase p, double t);

    double v_lv_ref_;
    StartupTiming timing_;
    StartupPhase phase_ = StartupPhase::Idle;
    double entry_ = 0.0;
    bool ready_ = false;
    bool aborted_ = false;
};

/// Low-bandwidth monitoring link carrying the 'ready' token. Messages are
/// delivered no earlier than `latency` after sending. May be fed from another
/// thread.
class MonitoringChannel {
public:
    explicit MonitoringChannel(double latency);

    void send(double t_sent);
    /// True once any message sent at t_s satisfies t_s + latency <= t_now.
    bool poll(double t_now);
    double latency() const { return latency_; }

private:
    double latency_;
    std::mutex mu_;
    std::deque<double> queue_;
};

// ---------------------------------------------------------------------------
// Composite controller ticked at f_c

enum class ModulationMode { Interleaved, NearestLevel };

const char* to_string(ModulationMode m);
ModulationMode modulation_mode_from_string(const std::string& s);

struct CentralMeasurements {
    double v_lv = 0.0;
    double i_lv = 0.0;
    Abc v_abc{};
    Abc i_abc{};
};

struct CentralOutputs {
    StartupCommands cmds;
    Abc v_cmd{};                       // per phase converter voltage
    std::vector<double> module_duty;   // per module, applied to the plant
    std::vector<GateWord> gate_words;  // per module
    double p_g_ref = 0.0;
    double q_g_ref = 0.0;
    bool modulation_saturated = false;
};

struct CentralDesign {
    SystemParams sys;
    double k_v = 2150.0 / 750.0;  // MVDC/LVDC scaling of the DC transformers
    double c_equivalent = 0.0;    // LVDC-referred capacitance for the PI design
    ModulationMode modulation = ModulationMode::Interleaved;
    StartupTiming timing;
};

/// LVDC-referred capacitance c_lv + 3N * c_mv * k_v^2.
double equivalent_lv_capacitance(const SystemParams& sys, double c_mv, double k_v);

class CentralController {
public:
    explicit CentralController(const CentralDesign& design);

    /// One control period. Returns the outputs computed on the previous call
    /// (one-sample computation delay).
    CentralOutputs step(double t, const CentralMeasurements& m, bool ready_received);

    void start_sequence(double t);
    /// Skip start-up: nominal operation with the PLL locked at theta.
    void set_nominal(double t, double theta, double v_amp);

    void set_q_ref(double q) { q_ref_ = q; }
    double q_ref() const { return q_ref_; }

    const Pll& pll() const { return pll_; }
    const LvdcRegulator& lvdc() const { return lvdc_; }
    const CurrentController& current_controller() const { return cc_; }
    const StartupSequencer& sequencer() const { return seq_; }
    double dt() const { return dt_; }

private:
    CentralDesign d_;
    double dt_;
    int n_blocks_;
    Pll pll_;
    LvdcRegulator lvdc_;
    CurrentController cc_;
    StartupSequencer seq_;
    double q_ref_ = 0.0;
    std::uint64_t tick_ = 0;
    CentralOutputs pending_;
};

}  // namespace sstsim::central
