#include "sstsim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sstsim {

using nlohmann::json;

namespace {

// Reads j[key] into out if present, reporting the dotted path on type errors.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

LoadKind load_kind_from_json(const json& j, const std::string& where, double& value) {
    if (j.contains("i_lv")) {
        read(j, "i_lv", value, where);
        return LoadKind::Current;
    }
    if (j.contains("p_lv")) {
        read(j, "p_lv", value, where);
        return LoadKind::Power;
    }
    throw ConfigError(where + " needs \"i_lv\" or \"p_lv\"");
}

void load_value_to_json(json& j, LoadKind kind, double value) {
    j[kind == LoadKind::Current ? "i_lv" : "p_lv"] = value;
}

void system_from_json(const json& j, SystemParams& s) {
    const std::string w = "system";
    require_object(j, w);
    read(j, "s_rated", s.s_rated, w);
    read(j, "p_rated", s.p_rated, w);
    read(j, "q_rated", s.q_rated, w);
    read(j, "v_grid_ll", s.v_grid_ll, w);
    read(j, "omega_0", s.omega_0, w);
    read(j, "v_lv_ref", s.v_lv_ref, w);
    read(j, "n_blocks", s.n_blocks, w);
    read(j, "f_c", s.f_c, w);
    read(j, "l_filter", s.l_filter, w);
    read(j, "c_lv", s.c_lv, w);
    read(j, "lvdc_bw_hz", s.lvdc_bw_hz, w);
    read(j, "pll_bw_hz", s.pll_bw_hz, w);
    read(j, "cc_bw_hz", s.cc_bw_hz, w);
    read(j, "precharge_i_limit", s.precharge_i_limit, w);
    read(j, "precharge_v_target", s.precharge_v_target, w);
    read(j, "precharge_r", s.precharge_r, w);
}

json system_to_json(const SystemParams& s) {
    return {{"s_rated", s.s_rated},
            {"p_rated", s.p_rated},
            {"q_rated", s.q_rated},
            {"v_grid_ll", s.v_grid_ll},
            {"omega_0", s.omega_0},
            {"v_lv_ref", s.v_lv_ref},
            {"n_blocks", s.n_blocks},
            {"f_c", s.f_c},
            {"l_filter", s.l_filter},
            {"c_lv", s.c_lv},
            {"lvdc_bw_hz", s.lvdc_bw_hz},
            {"pll_bw_hz", s.pll_bw_hz},
            {"cc_bw_hz", s.cc_bw_hz},
            {"precharge_i_limit", s.precharge_i_limit},
            {"precharge_v_target", s.precharge_v_target},
            {"precharge_r", s.precharge_r}};
}

void spm_from_json(const json& j, SpmParams& p) {
    const std::string w = "spm";
    require_object(j, w);
    read(j, "v_mv_nom", p.v_mv_nom, w);
    read(j, "v_ac_nom", p.v_ac_nom, w);
    read(j, "v_lv_nom", p.v_lv_nom, w);
    read(j, "p_rated", p.p_rated, w);
    read(j, "q_rated", p.q_rated, w);
    read(j, "f_s1", p.f_s1, w);
    read(j, "f_s2", p.f_s2, w);
    read(j, "c_mv", p.c_mv, w);
    read(j, "l_leak", p.l_leak, w);
    read(j, "n_turns", p.n_turns, w);
    read(j, "c_b1", p.c_b1, w);
    read(j, "c_b2", p.c_b2, w);
    if (j.contains("phase_law")) {
        std::string law;
        read(j, "phase_law", law, w);
        p.phase_law = phase_law_from_string(law);
    }
}

json spm_to_json(const SpmParams& p) {
    return {{"v_mv_nom", p.v_mv_nom}, {"v_ac_nom", p.v_ac_nom}, {"v_lv_nom", p.v_lv_nom},
            {"p_rated", p.p_rated},   {"q_rated", p.q_rated},   {"f_s1", p.f_s1},
            {"f_s2", p.f_s2},         {"c_mv", p.c_mv},         {"l_leak", p.l_leak},
            {"n_turns", p.n_turns},   {"c_b1", p.c_b1},         {"c_b2", p.c_b2},
            {"phase_law", to_string(p.phase_law)}};
}

void gains_from_json(const json& j, DabGains& g) {
    const std::string w = "dab_gains";
    require_object(j, w);
    read(j, "k_v", g.k_v, w);
    read(j, "omega_ref", g.omega_ref, w);
    read(j, "k_pmv", g.k_pmv, w);
    read(j, "t_imv", g.t_imv, w);
    read(j, "t_rmv", g.t_rmv, w);
    read(j, "omega_bmv", g.omega_bmv, w);
    read(j, "omega_vs", g.omega_vs, w);
    read(j, "t_vs", g.t_vs, w);
    read(j, "t_s1", g.t_s1, w);
    read(j, "omega_0", g.omega_0, w);
}

json gains_to_json(const DabGains& g) {
    return {{"k_v", g.k_v},       {"omega_ref", g.omega_ref}, {"k_pmv", g.k_pmv},
            {"t_imv", g.t_imv},   {"t_rmv", g.t_rmv},         {"omega_bmv", g.omega_bmv},
            {"omega_vs", g.omega_vs}, {"t_vs", g.t_vs},       {"t_s1", g.t_s1},
            {"omega_0", g.omega_0}};
}

ToleranceSpec tolerances_from_json(const json& j, int n_modules) {
    const std::string w = "tolerances";
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nominal") return ToleranceSpec::nominal(n_modules);
        if (s == "ladder") return ToleranceSpec::ladder(n_modules);
        throw ConfigError("tolerances must be \"nominal\", \"ladder\" or an object (got \"" + s + "\")");
    }
    require_object(j, w);
    if (j.contains("ladder")) {
        bool ladder = false;
        read(j, "ladder", ladder, w);
        std::optional<std::uint64_t> seed;
        if (j.contains("seed") && !j.at("seed").is_null()) {
            std::uint64_t s = 0;
            read(j, "seed", s, w);
            seed = s;
        }
        if (ladder) return ToleranceSpec::ladder(n_modules, seed);
    }
    ToleranceSpec t = ToleranceSpec::nominal(n_modules);
    read(j, "l_multipliers", t.l_multipliers, w);
    read(j, "c_mv_multipliers", t.c_mv_multipliers, w);
    return t;
}

void timing_from_json(const json& j, central::StartupTiming& t) {
    const std::string w = "scenario.timing";
    require_object(j, w);
    read(j, "precharge_fraction", t.precharge_fraction, w);
    read(j, "ramp", t.ramp, w);
    read(j, "ramp_hold", t.ramp_hold, w);
    read(j, "breaker_hold", t.breaker_hold, w);
    read(j, "nominal_delay", t.nominal_delay, w);
    read(j, "timeout", t.timeout, w);
}

json timing_to_json(const central::StartupTiming& t) {
    return {{"precharge_fraction", t.precharge_fraction}, {"ramp", t.ramp},
            {"ramp_hold", t.ramp_hold},                   {"breaker_hold", t.breaker_hold},
            {"nominal_delay", t.nominal_delay},           {"timeout", t.timeout}};
}

}  // namespace

const char* to_string(EventAction a) {
    switch (a) {
        case EventAction::SetLoad: return "set_load";
        case EventAction::SetQref: return "set_qref";
        case EventAction::ToggleResonant: return "toggle_resonant";
        case EventAction::OpenBreaker: return "open_breaker";
        case EventAction::MvRefStep: return "mv_ref_step";
    }
    return "?";
}

EventAction event_action_from_string(const std::string& s) {
    for (auto a : {EventAction::SetLoad, EventAction::SetQref, EventAction::ToggleResonant, EventAction::OpenBreaker,
                   EventAction::MvRefStep}) {
        if (s == to_string(a)) return a;
    }
    throw ConfigError("unknown event action \"" + s + "\"");
}

Config default_config() {
    Config c;
    c.dab_gains = DabGains::defaults_for(c.spm);
    c.tolerances = ToleranceSpec::nominal(c.system.n_modules());
    return c;
}

ScenarioSpec scenario_from_json(const json& j, const ScenarioSpec& base) {
    const std::string w = "scenario";
    require_object(j, w);
    ScenarioSpec s = base;
    read(j, "name", s.name, w);
    read(j, "duration", s.duration, w);
    read(j, "dt_plant", s.dt_plant, w);
    read(j, "resonant_enabled", s.resonant_enabled, w);
    read(j, "startup_enabled", s.startup_enabled, w);
    read(j, "decimate", s.decimate, w);
    read(j, "q_ref", s.q_ref, w);
    read(j, "ready_latency", s.ready_latency, w);
    read(j, "theta0", s.theta0, w);
    read(j, "record_gates", s.record_gates, w);
    if (j.contains("modulation")) {
        std::string m;
        read(j, "modulation", m, w);
        s.modulation = central::modulation_mode_from_string(m);
    }
    if (j.contains("module_order_seed")) {
        if (j.at("module_order_seed").is_null()) {
            s.module_order_seed.reset();
        } else {
            std::uint64_t seed = 0;
            read(j, "module_order_seed", seed, w);
            s.module_order_seed = seed;
        }
    }
    if (j.contains("timing")) timing_from_json(j.at("timing"), s.timing);

    if (j.contains("load_profile")) {
        const json& lp = j.at("load_profile");
        require_object(lp, w + ".load_profile");
        if (lp.contains("steps")) {
            s.load_profile.steps.clear();
            int idx = 0;
            for (const json& st : lp.at("steps")) {
                const std::string sw = w + ".load_profile.steps[" + std::to_string(idx++) + "]";
                require_object(st, sw);
                LoadStep step;
                read(st, "t", step.t, sw);
                step.kind = load_kind_from_json(st, sw, step.value);
                s.load_profile.steps.push_back(step);
            }
        }
        if (lp.contains("mvdc_bleed_r")) {
            if (lp.at("mvdc_bleed_r").is_null()) {
                s.load_profile.mvdc_bleed_r.reset();
            } else {
                double r = 0.0;
                read(lp, "mvdc_bleed_r", r, w + ".load_profile");
                s.load_profile.mvdc_bleed_r = r;
            }
        }
    }
    if (j.contains("events")) {
        s.events.clear();
        int idx = 0;
        for (const json& ev : j.at("events")) {
            const std::string ew = w + ".events[" + std::to_string(idx++) + "]";
            require_object(ev, ew);
            ScenarioEvent e;
            read(ev, "t", e.t, ew);
            std::string action;
            read(ev, "action", action, ew);
            e.action = event_action_from_string(action);
            read(ev, "value", e.value, ew);
            read(ev, "module", e.module, ew);
            if (e.action == EventAction::SetLoad && (ev.contains("i_lv") || ev.contains("p_lv"))) {
                e.kind = load_kind_from_json(ev, ew, e.value);
            }
            s.events.push_back(e);
        }
    }
    return s;
}

json to_json(const ScenarioSpec& s) {
    json steps = json::array();
    for (const auto& st : s.load_profile.steps) {
        json js{{"t", st.t}};
        load_value_to_json(js, st.kind, st.value);
        steps.push_back(js);
    }
    json lp{{"steps", steps}};
    lp["mvdc_bleed_r"] = s.load_profile.mvdc_bleed_r ? json(*s.load_profile.mvdc_bleed_r) : json(nullptr);

    json events = json::array();
    for (const auto& e : s.events) {
        json je{{"t", e.t}, {"action", to_string(e.action)}};
        if (e.action == EventAction::SetLoad) {
            load_value_to_json(je, e.kind, e.value);
        } else {
            je["value"] = e.value;
        }
        if (e.action == EventAction::MvRefStep) je["module"] = e.module;
        events.push_back(je);
    }

    json j{{"name", s.name},
           {"duration", s.duration},
           {"dt_plant", s.dt_plant},
           {"resonant_enabled", s.resonant_enabled},
           {"startup_enabled", s.startup_enabled},
           {"decimate", s.decimate},
           {"q_ref", s.q_ref},
           {"ready_latency", s.ready_latency},
           {"theta0", s.theta0},
           {"record_gates", s.record_gates},
           {"modulation", central::to_string(s.modulation)},
           {"timing", timing_to_json(s.timing)},
           {"load_profile", lp},
           {"events", events}};
    j["module_order_seed"] = s.module_order_seed ? json(*s.module_order_seed) : json(nullptr);
    return j;
}

Config config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "system" && key != "spm" && key != "dab_gains" && key != "tolerances" && key != "scenario") {
            throw ConfigError("unknown top-level config key \"" + key + "\"");
        }
    }
    Config c = default_config();
    if (j.contains("system")) system_from_json(j.at("system"), c.system);
    if (j.contains("spm")) spm_from_json(j.at("spm"), c.spm);

    // Gains that follow the module design unless given explicitly.
    c.dab_gains = DabGains::defaults_for(c.spm);
    if (j.contains("dab_gains")) gains_from_json(j.at("dab_gains"), c.dab_gains);

    if (c.system.n_blocks < 1) throw ConfigError("n_blocks must be ≥ 1");
    c.tolerances = j.contains("tolerances") ? tolerances_from_json(j.at("tolerances"), c.system.n_modules())
                                            : ToleranceSpec::nominal(c.system.n_modules());
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    validate(c);
    return c;
}

json to_json(const Config& c) {
    return {{"system", system_to_json(c.system)},
            {"spm", spm_to_json(c.spm)},
            {"dab_gains", gains_to_json(c.dab_gains)},
            {"tolerances", {{"l_multipliers", c.tolerances.l_multipliers},
                            {"c_mv_multipliers", c.tolerances.c_mv_multipliers}}},
            {"scenario", to_json(c.scenario)}};
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config \"" + path + "\" does not parse: " + e.what());
    }
    return config_from_json(j);
}

void save_config(const Config& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file \"" + path + "\"");
    out << to_json(c).dump(2) << '\n';
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
    if (explicit_path && !explicit_path->empty()) return explicit_path;
    if (const char* env = std::getenv("SSTSIM_CONFIG"); env != nullptr && *env != '\0') return std::string(env);
    return std::nullopt;
}

void validate(const ScenarioSpec& s, const SpmParams& spm) {
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) throw ConfigError("scenario.duration must be >= 0");
    if (!(s.dt_plant > 0.0)) throw ConfigError("scenario.dt_plant must be > 0");
    if (s.dt_plant > 1.0 / (10.0 * spm.f_s1) * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "scenario.dt_plant = " << s.dt_plant << " s exceeds 1/(10 f_s1) = " << 1.0 / (10.0 * spm.f_s1) << " s";
        throw ConfigError(os.str());
    }
    if (s.decimate < 1) throw ConfigError("scenario.decimate must be >= 1");
    if (!(s.ready_latency >= 0.0)) throw ConfigError("scenario.ready_latency must be >= 0");
    for (std::size_t i = 1; i < s.load_profile.steps.size(); ++i) {
        if (!(s.load_profile.steps[i].t > s.load_profile.steps[i - 1].t)) {
            throw ConfigError("scenario.load_profile.steps times must be strictly increasing (index " +
                              std::to_string(i) + ")");
        }
    }
    if (s.load_profile.mvdc_bleed_r && !(*s.load_profile.mvdc_bleed_r > 0.0)) {
        throw ConfigError("scenario.load_profile.mvdc_bleed_r must be > 0");
    }
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& e = s.events[i];
        if (e.t < 0.0 || e.t > s.duration) {
            std::ostringstream os;
            os << "scenario.events[" << i << "] time " << e.t << " s outside [0, " << s.duration << "]";
            throw ConfigError(os.str());
        }
    }
}

void validate(const Config& c) {
    validate(c.system);
    validate(c.spm);
    validate(c.dab_gains);
    validate(c.tolerances, c.system.n_modules());
    validate_consistency(c.system, c.spm);
    const double k_v = c.spm.v_mv_nom / c.spm.v_lv_nom;
    if (std::abs(c.dab_gains.k_v - k_v) > 1e-6 * k_v) {
        std::ostringstream os;
        os << "dab_gains.k_v = " << c.dab_gains.k_v << " differs from v_mv_nom / v_lv_nom = " << k_v;
        throw ConfigError(os.str());
    }
    if (std::abs(c.dab_gains.t_s1 * c.spm.f_s1 - 1.0) > 1e-9) {
        throw ConfigError("dab_gains.t_s1 must equal 1 / spm.f_s1");
    }
    validate(c.scenario, c.spm);
    for (const auto& e : c.scenario.events) {
        if (e.action == EventAction::MvRefStep && (e.module < 0 || e.module >= c.system.n_modules())) {
            throw ConfigError("mv_ref_step module index " + std::to_string(e.module) + " out of range");
        }
    }
}

}  // namespace sstsim
