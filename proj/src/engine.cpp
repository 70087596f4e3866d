#include "sstsim/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sstsim/plant.hpp"

namespace sstsim::sim {

namespace {

// MV bus charging through the LV-side bridge during the duty ramp.
constexpr double kChargeTau = 5e-3;
// Any state beyond this multiple of its rating aborts the run.
constexpr double kBlowUpFactor = 10.0;

std::uint64_t period_steps(double f_hz, double dt, const char* what) {
    const double ratio = 1.0 / (f_hz * dt);
    const auto steps = static_cast<std::uint64_t>(std::llround(ratio));
    if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-6 * ratio) {
        std::ostringstream os;
        os << "dt_plant = " << dt << " s does not divide the " << what << " period " << 1.0 / f_hz << " s";
        throw ConfigError(os.str());
    }
    return steps;
}

std::string two_digit(int k) {
    std::string s = std::to_string(k);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trace

Trace::Trace(std::vector<std::string> columns) : names_(std::move(columns)), cols_(names_.size()) {}

void Trace::add_row(const std::vector<double>& row) {
    if (row.size() != cols_.size()) throw std::invalid_argument("trace row has wrong width");
    for (std::size_t i = 0; i < row.size(); ++i) cols_[i].push_back(row[i]);
}

std::size_t Trace::index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw std::out_of_range("no trace column \"" + std::string(name) + "\"");
}

bool Trace::has(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& Trace::col(std::string_view name) const { return cols_[index(name)]; }

std::vector<std::string> trace_columns(int n_modules) {
    std::vector<std::string> c{"t", "v_lv", "i_lv", "va", "vb", "vc", "ia", "ib", "ic"};
    for (const char* prefix : {"vmv_", "phi_", "pdab_", "pafe_"}) {
        for (int k = 0; k < n_modules; ++k) c.push_back(prefix + two_digit(k));
    }
    c.emplace_back("phase");
    c.emplace_back("pgref");
    return c;
}

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

void write_csv(const Trace& tr, std::ostream& out) {
    const auto& names = tr.columns();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
    std::vector<const std::vector<double>*> cols;
    for (const auto& n : names) cols.push_back(&tr.col(n));
    char buf[64];
    std::string line;
    for (std::size_t r = 0; r < tr.rows(); ++r) {
        line.clear();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) line.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof(buf), (*cols[i])[r]);
            line.append(buf, res.ptr);
        }
        line.push_back('\n');
        out << line;
    }
}

std::string to_csv(const Trace& tr) {
    std::ostringstream os;
    write_csv(tr, os);
    return os.str();
}

void write_gates_csv(const Trace& tr, std::ostream& out) {
    const std::size_t m = tr.gate_words.empty() ? 0 : tr.gate_words.front().size();
    out << "t";
    for (std::size_t k = 0; k < m; ++k) out << ",gw_" << two_digit(static_cast<int>(k));
    out << '\n';
    for (std::size_t r = 0; r < tr.gate_t.size(); ++r) {
        out << format_double(tr.gate_t[r]);
        for (auto w : tr.gate_words[r]) out << ',' << static_cast<int>(w);
        out << '\n';
    }
}

Trace read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
    std::vector<std::string> names;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) names.push_back(cell);
    }
    Trace tr(names);
    std::vector<double> row(names.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto r = std::from_chars(p, end, row[i]);
            if (r.ec != std::errc()) throw std::runtime_error("bad CSV number in row " + std::to_string(tr.rows()));
            p = r.ptr;
            if (p < end && *p == ',') ++p;
        }
        tr.add_row(row);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Summary

double RunResult::first_event(std::string_view name) const {
    for (const auto& e : timeline) {
        if (e.name == name) return e.t;
    }
    return -1.0;
}

nlohmann::json RunResult::summary(double p_rated) const {
    nlohmann::json transitions_j = nlohmann::json::array();
    for (const auto& tr : transitions) transitions_j.push_back({{"phase", central::to_string(tr.phase)}, {"t", tr.t}});
    nlohmann::json timeline_j = nlohmann::json::array();
    for (const auto& e : timeline) timeline_j.push_back({{"event", e.name}, {"t", e.t}});
    nlohmann::json j{{"steps", steps},
                     {"t_end", t_end},
                     {"aborted", aborted},
                     {"dab_ticks", dab_ticks},
                     {"central_ticks", central_ticks},
                     {"tick_alignment_ok", tick_alignment_ok},
                     {"illegal_gate_word", illegal_gate_word},
                     {"energy_residual_max_w", energy_residual_max_w},
                     {"energy_residual_max_rel", energy_residual_max_w / p_rated},
                     {"energy_residual_max_t", energy_residual_max_t},
                     {"frames", trace.rows()},
                     {"startup", {{"aborted", startup_aborted}, {"transitions", transitions_j}, {"timeline", timeline_j}}}};
    if (aborted) {
        j["abort_reason"] = abort_reason;
        j["abort_step"] = abort_step;
        j["abort_frame"] = abort_frame;
    }
    nlohmann::json fin{{"v_lv", final_v_lv}};
    if (!final_v_mv.empty()) {
        const auto [lo, hi] = std::minmax_element(final_v_mv.begin(), final_v_mv.end());
        fin["v_mv_min"] = *lo;
        fin["v_mv_max"] = *hi;
        fin["v_mv_mean"] = std::accumulate(final_v_mv.begin(), final_v_mv.end(), 0.0) / final_v_mv.size();
    }
    j["final"] = fin;
    return j;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const Config& cfg) : cfg_(cfg) {
    validate(cfg_);
    m_ = cfg_.system.n_modules();
    n_blocks_ = cfg_.system.n_blocks;
    for (int k = 0; k < m_; ++k) spm_.push_back(apply_tolerances(cfg_.spm, cfg_.tolerances, static_cast<std::size_t>(k)));

    const auto& sc = cfg_.scenario;
    dab_period_ = period_steps(cfg_.spm.f_s1, sc.dt_plant, "DAB sampling");
    central_period_ = period_steps(cfg_.system.f_c, sc.dt_plant, "central control");
    n_total_ = static_cast<std::uint64_t>(std::llround(sc.duration / sc.dt_plant));

    x_.assign(static_cast<std::size_t>(m_) + 4, 0.0);
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->assign(x_.size(), 0.0);
    meff_.assign(static_cast<std::size_t>(m_), 0.0);

    const auto um = static_cast<std::size_t>(m_);
    held_.phi.assign(um, 0.0);
    held_.duty.assign(um, 0.0);
    held_.words.assign(um, central::GateWord::Zero);

    for (int k = 0; k < m_; ++k) dab_.emplace_back(cfg_.dab_gains, spm_[static_cast<std::size_t>(k)].phase_limit(), sc.resonant_enabled);
    regulating_.assign(um, false);

    central::CentralDesign design;
    design.sys = cfg_.system;
    design.k_v = cfg_.dab_gains.k_v;
    design.c_equivalent = central::equivalent_lv_capacitance(cfg_.system, cfg_.spm.c_mv, cfg_.dab_gains.k_v);
    design.modulation = sc.modulation;
    design.timing = sc.timing;
    central_ = std::make_unique<central::CentralController>(design);
    central_->set_q_ref(sc.q_ref);
    channel_ = std::make_unique<central::MonitoringChannel>(sc.ready_latency);

    events_ = sc.events;
    std::stable_sort(events_.begin(), events_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    order_.resize(um);
    std::iota(order_.begin(), order_.end(), 0);
    if (sc.module_order_seed) order_rng_.seed(*sc.module_order_seed);

    res_.trace = Trace(trace_columns(m_));
}

double Simulator::time() const { return static_cast<double>(n_) * cfg_.scenario.dt_plant; }

double Simulator::theta(double t) const { return cfg_.scenario.theta0 + cfg_.system.omega_0 * t; }

plant::Abc Simulator::i_line() const {
    const auto b = static_cast<std::size_t>(m_);
    return {x_[b], x_[b + 1], x_[b + 2]};
}

double Simulator::load_current(double v_lv) const {
    if (held_.load_kind == LoadKind::Current) return held_.load;
    return held_.load / std::max(v_lv, 1.0);
}

double Simulator::energy(const double* x) const {
    double e = 0.0;
    for (int k = 0; k < m_; ++k) e += 0.5 * spm_[static_cast<std::size_t>(k)].c_mv * x[k] * x[k];
    for (int ph = 0; ph < 3; ++ph) e += 0.5 * cfg_.system.l_filter * x[m_ + ph] * x[m_ + ph];
    e += 0.5 * cfg_.system.c_lv * x[m_ + 3] * x[m_ + 3];
    return e;
}

void Simulator::derivative(double t, const double* x, double* dx, double& p_net) const {
    const auto& sys = cfg_.system;
    plant::GridPlantState g;
    g.v_phase = plant::grid_source_voltages(theta(t), sys);
    g.i_phase = {x[m_], x[m_ + 1], x[m_ + 2]};
    g.v_lv = x[m_ + 3];
    g.i_lv = load_current(g.v_lv);
    g.breaker_closed = held_.breaker;
    g.precharge_active = held_.precharge;

    // Stack voltages and each module's effective AFE modulation.
    plant::Abc stack{};
    double* meff = meff_.data();
    for (int ph = 0; ph < 3; ++ph) {
        double total = 0.0;
        double cmd = 0.0;
        for (int b = 0; b < n_blocks_; ++b) {
            const int k = ph * n_blocks_ + b;
            total += x[k];
            cmd += held_.duty[static_cast<std::size_t>(k)] * x[k];
        }
        double ratio = 0.0;
        if (held_.afe_on) {
            stack[ph] = cmd;
        } else if (held_.breaker) {
            stack[ph] = plant::diode_stack_voltage(g.v_phase[ph], g.i_phase[ph], total);
            ratio = total > 0.0 ? stack[ph] / total : 0.0;
        }
        for (int b = 0; b < n_blocks_; ++b) {
            const int k = ph * n_blocks_ + b;
            meff[k] = held_.afe_on ? held_.duty[static_cast<std::size_t>(k)] : ratio;
        }
    }

    const double v_lv = g.v_lv;
    const double bleed_r = held_.bleed ? *cfg_.scenario.load_profile.mvdc_bleed_r : 0.0;
    double i_dab_lv = 0.0;
    double p_bleed = 0.0;
    for (int k = 0; k < m_; ++k) {
        const auto& p = spm_[static_cast<std::size_t>(k)];
        const double v = x[k];
        const double i_line = g.i_phase[static_cast<std::size_t>(k / n_blocks_)];
        double i_mv = 0.0;
        if (held_.dab_mode == DabMode::Regulate) {
            const double phi = held_.phi[static_cast<std::size_t>(k)];
            i_mv = plant::dab_mv_current(phi, v_lv, p);
            i_dab_lv += plant::dab_lv_current(phi, v, p);
        } else if (held_.dab_mode == DabMode::Charge && v_lv > 1.0) {
            const double target = held_.charge_duty * 2.0 * p.n_turns * v_lv;
            const double i_chg = std::max(0.0, p.c_mv * (target - v) / kChargeTau);
            i_mv = -i_chg;
            i_dab_lv -= v * i_chg / v_lv;
        }
        double i_bleed = 0.0;
        if (bleed_r > 0.0) {
            i_bleed = v / bleed_r;
            p_bleed += v * i_bleed;
        }
        dx[k] = (meff[k] * i_line - i_mv - i_bleed) / p.c_mv;
    }

    const auto gd = plant::grid_derivative(g, stack, sys, i_dab_lv);
    for (int ph = 0; ph < 3; ++ph) dx[m_ + ph] = gd.di_dt[static_cast<std::size_t>(ph)];
    dx[m_ + 3] = gd.dv_lv_dt;

    double p_grid = 0.0;
    for (int ph = 0; ph < 3; ++ph) p_grid += g.v_phase[ph] * g.i_phase[ph];
    p_net = p_grid + v_lv * plant::precharge_current(g, sys) - v_lv * g.i_lv - p_bleed;
}

void Simulator::apply_events(double t) {
    const double dt = cfg_.scenario.dt_plant;
    const auto& steps = cfg_.scenario.load_profile.steps;
    while (next_load_ < steps.size() && steps[next_load_].t <= t + 0.5 * dt) {
        held_.load_kind = steps[next_load_].kind;
        held_.load = steps[next_load_].value;
        ++next_load_;
    }
    while (next_event_ < events_.size() && events_[next_event_].t <= t + 0.5 * dt) {
        const auto& e = events_[next_event_++];
        switch (e.action) {
            case EventAction::SetLoad:
                held_.load_kind = e.kind;
                held_.load = e.value;
                break;
            case EventAction::SetQref:
                central_->set_q_ref(e.value);
                break;
            case EventAction::ToggleResonant:
                for (auto& d : dab_) d.set_resonant_enabled(e.value < 0.0 ? !d.resonant_enabled() : e.value != 0.0);
                break;
            case EventAction::OpenBreaker:
                breaker_forced_open_ = true;
                if (held_.breaker) res_.timeline.push_back({"breaker_open", t});
                held_.breaker = false;
                for (int ph = 0; ph < 3; ++ph) x_[static_cast<std::size_t>(m_ + ph)] = 0.0;
                break;
            case EventAction::MvRefStep:
                dab_[static_cast<std::size_t>(e.module)].set_reference_offset(e.value);
                break;
        }
    }
}

void Simulator::central_tick(double t) {
    if (res_.central_ticks > 0 && n_ - last_central_tick_ != central_period_) res_.tick_alignment_ok = false;
    last_central_tick_ = n_;
    ++res_.central_ticks;

    central::CentralMeasurements meas;
    meas.v_lv = v_lv();
    meas.i_lv = load_current(meas.v_lv);
    meas.v_abc = plant::grid_source_voltages(theta(t), cfg_.system);
    meas.i_abc = i_line();
    const bool ready = channel_->poll(t);
    if (ready) res_.timeline.push_back({"ready_received", t});
    const central::CentralOutputs out = central_->step(t, meas, ready);
    const auto& c = out.cmds;

    if (held_.precharge && !c.precharge_connect) res_.timeline.push_back({"precharge_disconnect", t});
    held_.precharge = c.precharge_connect;
    const bool breaker = c.breaker_close && !breaker_forced_open_;
    if (held_.breaker && !breaker) {
        for (int ph = 0; ph < 3; ++ph) x_[static_cast<std::size_t>(m_ + ph)] = 0.0;
        res_.timeline.push_back({"breaker_open", t});
    }
    if (!held_.breaker && breaker) res_.timeline.push_back({"breaker_close", t});
    held_.breaker = breaker;
    held_.afe_on = c.afe_enable;
    held_.dab_mode = c.dab_regulate ? DabMode::Regulate : c.dab_lv_enable ? DabMode::Charge : DabMode::Off;
    held_.charge_duty = c.dab_lv_duty;
    held_.bleed = cfg_.scenario.load_profile.mvdc_bleed_r.has_value() && c.phase != central::StartupPhase::Nominal;
    held_.p_g_ref = out.p_g_ref;
    for (std::size_t k = 0; k < held_.duty.size(); ++k) {
        held_.duty[k] = c.afe_enable ? out.module_duty[k] : 0.0;
        held_.words[k] = c.afe_enable ? out.gate_words[k] : central::GateWord::Zero;
    }
    if (c.phase != held_.phase) {
        res_.transitions.push_back({c.phase, t});
        held_.phase = c.phase;
    }
    if (c.aborted) res_.startup_aborted = true;

    for (auto w : held_.words) {
        if (static_cast<std::uint8_t>(w) > 2) res_.illegal_gate_word = true;
    }
    if (cfg_.scenario.record_gates) {
        std::vector<std::uint8_t> row(held_.words.size());
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = static_cast<std::uint8_t>(held_.words[k]);
        res_.trace.gate_t.push_back(t);
        res_.trace.gate_words.push_back(std::move(row));
    }
}

void Simulator::dab_tick(double t) {
    if (res_.dab_ticks > 0 && n_ - last_dab_tick_ != dab_period_) res_.tick_alignment_ok = false;
    last_dab_tick_ = n_;
    ++res_.dab_ticks;

    if (cfg_.scenario.module_order_seed) std::shuffle(order_.begin(), order_.end(), order_rng_);
    const double vlv = v_lv();
    const bool regulate = held_.dab_mode == DabMode::Regulate;
    for (int k : order_) {
        const auto uk = static_cast<std::size_t>(k);
        if (regulate) {
            if (!regulating_[uk]) {
                dab_[uk].reset_regulator();
                regulating_[uk] = true;
            }
            held_.phi[uk] = dab_[uk].step(x_[uk], vlv);
        } else {
            dab_[uk].track(x_[uk], vlv);
            regulating_[uk] = false;
            held_.phi[uk] = 0.0;
        }
    }
    if (regulate && !token_sent_ &&
        std::all_of(dab_.begin(), dab_.end(), [](const dab::DabController& d) { return d.ready(); })) {
        channel_->send(t);
        token_sent_ = true;
        res_.timeline.push_back({"ready_sent", t});
    }
}

void Simulator::log_frame(double t) {
    const auto& sys = cfg_.system;
    const double vlv = v_lv();
    const plant::Abc vs = plant::grid_source_voltages(theta(t), sys);
    const plant::Abc i = i_line();
    std::vector<double> row;
    row.reserve(res_.trace.columns().size());
    row.insert(row.end(), {t, vlv, load_current(vlv), vs[0], vs[1], vs[2], i[0], i[1], i[2]});

    // Effective modulation as seen by the plant.
    std::vector<double> meff(static_cast<std::size_t>(m_), 0.0);
    for (int ph = 0; ph < 3; ++ph) {
        double total = 0.0;
        for (int b = 0; b < n_blocks_; ++b) total += x_[static_cast<std::size_t>(ph * n_blocks_ + b)];
        const double ratio =
            (!held_.afe_on && held_.breaker && total > 0.0) ? plant::diode_stack_voltage(vs[ph], i[ph], total) / total : 0.0;
        for (int b = 0; b < n_blocks_; ++b) {
            const auto k = static_cast<std::size_t>(ph * n_blocks_ + b);
            meff[k] = held_.afe_on ? held_.duty[k] : ratio;
        }
    }

    for (int k = 0; k < m_; ++k) row.push_back(x_[static_cast<std::size_t>(k)]);
    for (int k = 0; k < m_; ++k) row.push_back(held_.phi[static_cast<std::size_t>(k)]);
    for (int k = 0; k < m_; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double v = x_[uk];
        double p = 0.0;
        if (held_.dab_mode == DabMode::Regulate) {
            p = plant::dab_power(held_.phi[uk], vlv, v, spm_[uk]);
        } else if (held_.dab_mode == DabMode::Charge && vlv > 1.0) {
            const double target = held_.charge_duty * 2.0 * spm_[uk].n_turns * vlv;
            p = -v * std::max(0.0, spm_[uk].c_mv * (target - v) / kChargeTau);
        }
        row.push_back(p);
    }
    for (int k = 0; k < m_; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        row.push_back(meff[uk] * x_[uk] * i[static_cast<std::size_t>(k / n_blocks_)]);
    }
    row.push_back(static_cast<double>(static_cast<int>(held_.phase)));
    row.push_back(held_.p_g_ref);
    res_.trace.add_row(row);
}

void Simulator::init_nominal() {
    const auto& sys = cfg_.system;
    const double vlv = sys.v_lv_ref;
    const double v_mv = cfg_.dab_gains.k_v * vlv;
    const double p0 = held_.load_kind == LoadKind::Current ? vlv * held_.load : held_.load;
    const double q0 = cfg_.scenario.q_ref;
    const double amp = sys.v_phase_peak();
    const double th0 = theta(0.0);

    for (int k = 0; k < m_; ++k) x_[static_cast<std::size_t>(k)] = v_mv;
    for (int ph = 0; ph < 3; ++ph) {
        const double th = th0 - ph * kTwoPi / 3.0;
        x_[static_cast<std::size_t>(m_ + ph)] = 2.0 / (3.0 * amp) * (p0 * std::cos(th) + q0 * std::sin(th));
    }
    x_[static_cast<std::size_t>(m_) + 3] = vlv;

    for (int k = 0; k < m_; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double phi = plant::phase_for_power(p0 / m_, vlv, v_mv, spm_[uk]);
        dab_[uk].preset(v_mv, vlv, phi);
        held_.phi[uk] = phi;
        regulating_[uk] = true;
    }
    central_->set_nominal(0.0, th0, amp);
    held_.breaker = true;
    held_.afe_on = true;
    held_.dab_mode = DabMode::Regulate;
    held_.phase = central::StartupPhase::Nominal;
    token_sent_ = true;
}

void Simulator::init_startup() {
    central_->start_sequence(0.0);
    held_.phase = central::StartupPhase::Idle;
}

void Simulator::initialise() {
    if (initialised_) return;
    initialised_ = true;
    apply_events(0.0);
    if (cfg_.scenario.startup_enabled) {
        init_startup();
    } else {
        init_nominal();
    }
}

bool Simulator::check_blowup() {
    const auto& sys = cfg_.system;
    const double i_peak = std::sqrt(2.0) * sys.s_rated / (std::sqrt(3.0) * sys.v_grid_ll);
    for (std::size_t i = 0; i < x_.size(); ++i) {
        double limit = 0.0;
        const char* what = "";
        if (i < static_cast<std::size_t>(m_)) {
            limit = kBlowUpFactor * cfg_.spm.v_mv_nom;
            what = "v_mv";
        } else if (i < static_cast<std::size_t>(m_) + 3) {
            limit = kBlowUpFactor * i_peak;
            what = "line current";
        } else {
            limit = kBlowUpFactor * sys.v_lv_ref;
            what = "v_lv";
        }
        if (!std::isfinite(x_[i]) || std::abs(x_[i]) > limit) {
            std::ostringstream os;
            os << what << " state " << i << " = " << x_[i] << " exceeds " << limit << " at t = " << time() << " s";
            res_.aborted = true;
            res_.abort_reason = os.str();
            res_.abort_step = static_cast<std::int64_t>(n_);
            log_frame(time());
            res_.abort_frame = static_cast<std::int64_t>(res_.trace.rows()) - 1;
            return true;
        }
    }
    return false;
}

bool Simulator::advance() {
    if (!initialised_) initialise();
    if (finished_) return false;
    const double dt = cfg_.scenario.dt_plant;
    const double t = time();

    apply_events(t);
    if (n_ % central_period_ == 0) central_tick(t);
    if (n_ % dab_period_ == 0) dab_tick(t);
    if (n_total_ > 0 && n_ % static_cast<std::uint64_t>(cfg_.scenario.decimate) == 0) log_frame(t);
    if (n_ >= n_total_) {
        finished_ = true;
        return false;
    }

    const std::size_t sz = x_.size();
    double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
    const double e0 = energy(x_.data());
    derivative(t, x_.data(), k1_.data(), p1);
    for (std::size_t i = 0; i < sz; ++i) tmp_[i] = x_[i] + 0.5 * dt * k1_[i];
    derivative(t + 0.5 * dt, tmp_.data(), k2_.data(), p2);
    for (std::size_t i = 0; i < sz; ++i) tmp_[i] = x_[i] + 0.5 * dt * k2_[i];
    derivative(t + 0.5 * dt, tmp_.data(), k3_.data(), p3);
    for (std::size_t i = 0; i < sz; ++i) tmp_[i] = x_[i] + dt * k3_[i];
    derivative(t + dt, tmp_.data(), k4_.data(), p4);
    for (std::size_t i = 0; i < sz; ++i) x_[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    const double e1 = energy(x_.data());

    const double residual = std::abs((e1 - e0) / dt - (p1 + 2.0 * p2 + 2.0 * p3 + p4) / 6.0);
    if (residual > res_.energy_residual_max_w) {
        res_.energy_residual_max_w = residual;
        res_.energy_residual_max_t = t;
    }
    ++n_;
    ++res_.steps;
    if (check_blowup()) {
        finished_ = true;
        return false;
    }
    return true;
}

RunResult Simulator::run() {
    initialise();
    while (advance()) {
    }
    res_.t_end = time();
    res_.final_v_lv = v_lv();
    res_.final_v_mv.assign(x_.begin(), x_.begin() + m_);
    return std::move(res_);
}

}  // namespace sstsim::sim
