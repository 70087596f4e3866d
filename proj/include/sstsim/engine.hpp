#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sstsim/central_controller.hpp"
#include "sstsim/config.hpp"
#include "sstsim/dab_controller.hpp"
#include "sstsim/plant.hpp"

namespace sstsim::sim {

/// Column-major table of logged frames.
class Trace {
public:
    Trace() = default;
    explicit Trace(std::vector<std::string> columns);

    void add_row(const std::vector<double>& row);
    std::size_t rows() const { return cols_.empty() ? 0 : cols_.front().size(); }
    const std::vector<std::string>& columns() const { return names_; }
    /// Throws std::out_of_range for an unknown name.
    const std::vector<double>& col(std::string_view name) const;
    std::size_t index(std::string_view name) const;
    bool has(std::string_view name) const;

    // Gate words per central tick.
    std::vector<double> gate_t;
    std::vector<std::vector<std::uint8_t>> gate_words;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
};

/// t,v_lv,i_lv,va,vb,vc,ia,ib,ic,vmv_00..,phi_00..,pdab_00..,pafe_00..,phase,pgref
std::vector<std::string> trace_columns(int n_modules);

/// Header line then one line per frame; doubles in shortest round-trip form.
void write_csv(const Trace& tr, std::ostream& out);
std::string to_csv(const Trace& tr);
void write_gates_csv(const Trace& tr, std::ostream& out);
Trace read_csv(std::istream& in);

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

struct PhaseTransition {
    central::StartupPhase phase = central::StartupPhase::Idle;
    double t = 0.0;
};

struct TimelineEvent {
    std::string name;  // breaker_close, breaker_open, precharge_disconnect, ready_sent, ready_received
    double t = 0.0;
};

struct RunResult {
    Trace trace;
    bool aborted = false;
    std::string abort_reason;
    std::int64_t abort_step = -1;
    std::int64_t abort_frame = -1;

    std::uint64_t steps = 0;
    double t_end = 0.0;
    std::uint64_t dab_ticks = 0;
    std::uint64_t central_ticks = 0;
    bool tick_alignment_ok = true;
    bool illegal_gate_word = false;
    double energy_residual_max_w = 0.0;
    double energy_residual_max_t = 0.0;
    std::vector<PhaseTransition> transitions;
    std::vector<TimelineEvent> timeline;
    bool startup_aborted = false;
    /// Time of the first timeline entry with this name, or a negative value.
    double first_event(std::string_view name) const;

    std::vector<double> final_v_mv;
    double final_v_lv = 0.0;

    /// Base summary (final values, bookkeeping, start-up timeline).
    nlohmann::json summary(double p_rated) const;
};

enum class DabMode { Off, Charge, Regulate };

/// Fixed-step RK4 plant with DAB controllers ticked at f_s1 and the central
/// controller at f_c, each with zero-order hold between ticks.
class Simulator {
public:
    explicit Simulator(const Config& cfg);

    /// Runs the whole scenario.
    RunResult run();

    // Fine-grained stepping, mostly for tests.
    void initialise();
    /// Controller ticks and logging for the current step, then one RK4 step.
    /// Returns false once the run is finished or aborted.
    bool advance();
    double time() const;
    std::uint64_t step_index() const { return n_; }
    std::uint64_t total_steps() const { return n_total_; }
    const std::vector<double>& state() const { return x_; }
    double v_mv(int k) const { return x_[static_cast<std::size_t>(k)]; }
    double v_lv() const { return x_[static_cast<std::size_t>(m_) + 3]; }
    plant::Abc i_line() const;
    double phi(int k) const { return held_.phi[static_cast<std::size_t>(k)]; }
    const dab::DabController& dab(int k) const { return dab_[static_cast<std::size_t>(k)]; }
    const central::CentralController& central() const { return *central_; }
    const SpmParams& module_params(int k) const { return spm_[static_cast<std::size_t>(k)]; }
    double stored_energy() const { return energy(x_.data()); }
    RunResult& result() { return res_; }

private:
    struct Held {
        std::vector<double> phi;
        std::vector<double> duty;
        std::vector<central::GateWord> words;
        bool afe_on = false;
        bool breaker = false;
        bool precharge = false;
        DabMode dab_mode = DabMode::Off;
        double charge_duty = 0.0;
        bool bleed = false;
        LoadKind load_kind = LoadKind::Current;
        double load = 0.0;
        double p_g_ref = 0.0;
        central::StartupPhase phase = central::StartupPhase::Idle;
    };

    void derivative(double t, const double* x, double* dx, double& p_net) const;
    double energy(const double* x) const;
    double load_current(double v_lv) const;
    double theta(double t) const;
    void apply_events(double t);
    void central_tick(double t);
    void dab_tick(double t);
    void log_frame(double t);
    void init_nominal();
    void init_startup();
    bool check_blowup();

    Config cfg_;
    int m_ = 0;
    int n_blocks_ = 0;
    std::vector<SpmParams> spm_;
    std::vector<double> x_;
    Held held_;

    std::vector<dab::DabController> dab_;
    std::vector<bool> regulating_;
    std::unique_ptr<central::CentralController> central_;
    std::unique_ptr<central::MonitoringChannel> channel_;
    bool token_sent_ = false;
    bool breaker_forced_open_ = false;

    std::vector<ScenarioEvent> events_;
    std::size_t next_event_ = 0;
    std::size_t next_load_ = 0;
    std::vector<int> order_;
    std::mt19937_64 order_rng_;

    std::uint64_t n_ = 0;
    std::uint64_t n_total_ = 0;
    std::uint64_t dab_period_ = 0;
    std::uint64_t central_period_ = 0;
    std::uint64_t last_dab_tick_ = 0;
    std::uint64_t last_central_tick_ = 0;
    bool initialised_ = false;
    bool finished_ = false;

    // Scratch for RK4.
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
    mutable std::vector<double> meff_;

    RunResult res_;
};

}  // namespace sstsim::sim
