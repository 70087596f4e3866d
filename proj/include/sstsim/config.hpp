#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sstsim/central_controller.hpp"
#include "sstsim/params.hpp"

namespace sstsim {

enum class LoadKind { Current, Power };

struct LoadStep {
    double t = 0.0;
    double value = 0.0;  // A or W drawn from the LVDC bus
    LoadKind kind = LoadKind::Current;
};

struct LoadProfile {
    std::vector<LoadStep> steps;
    /// Resistor across every MVDC bus until nominal operation (loss emulation).
    std::optional<double> mvdc_bleed_r;
};

enum class EventAction { SetLoad, SetQref, ToggleResonant, OpenBreaker, MvRefStep };

const char* to_string(EventAction a);
EventAction event_action_from_string(const std::string& s);

struct ScenarioEvent {
    double t = 0.0;
    EventAction action = EventAction::SetLoad;
    double value = 0.0;  // A / W / VAR / volts; for toggle_resonant, < 0 flips, else 0/1
    LoadKind kind = LoadKind::Current;
    int module = -1;  // mv_ref_step only
};

struct ScenarioSpec {
    std::string name = "custom";
    double duration = 0.5;
    double dt_plant = 1e-6;
    LoadProfile load_profile;
    bool resonant_enabled = true;
    bool startup_enabled = false;
    std::vector<ScenarioEvent> events;
    int decimate = 100;  // plant steps per logged frame
    double q_ref = 0.0;
    double ready_latency = 20e-3;
    double theta0 = 0.0;
    central::ModulationMode modulation = central::ModulationMode::Interleaved;
    central::StartupTiming timing;
    /// Evaluate the module controllers in a seeded random order each tick.
    std::optional<std::uint64_t> module_order_seed;
    bool record_gates = true;
};

struct Config {
    SystemParams system;
    SpmParams spm;
    DabGains dab_gains;
    ToleranceSpec tolerances;
    ScenarioSpec scenario;
};

/// Table values, nominal tolerances, an empty half-second scenario.
Config default_config();

/// Absent keys keep their defaults. Throws ConfigError on bad types, unknown
/// enum strings or violated invariants.
Config config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);
nlohmann::json to_json(const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const nlohmann::json& j, const ScenarioSpec& base = {});

Config load_config(const std::string& path);
void save_config(const Config& c, const std::string& path);

/// Config path from an explicit argument, else $SSTSIM_CONFIG, else none.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

void validate(const ScenarioSpec& s, const SpmParams& spm);
void validate(const Config& c);

}  // namespace sstsim
