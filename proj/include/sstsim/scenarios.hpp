#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sstsim/config.hpp"
#include "sstsim/engine.hpp"

namespace sstsim::scenarios {

struct Criterion {
    int id = 0;
    std::string name;
    bool pass = false;
    nlohmann::json detail;
};

struct NamedRun {
    std::string label;
    Config config;
    sim::RunResult result;
    double wall_s = 0.0;
};

struct PlotTable {
    std::string name;  // file stem
    sim::Trace table;
};

struct ScenarioReport {
    std::string name;
    std::vector<NamedRun> runs;
    std::vector<PlotTable> plots;
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<Criterion> criteria;

    bool pass() const;
    nlohmann::json summary() const;
};

/// Command-line style overrides applied on top of the catalog definition.
struct RunOptions {
    std::optional<bool> resonant;
    std::optional<double> duration;
    std::optional<int> decimate;
    std::optional<std::uint64_t> seed;
};

/// startup, load_step, balance, ripple, margins, determinism.
const std::vector<std::string>& catalog();
bool is_known(const std::string& name);

/// Full-load LV current for the system (P_rated / V_LV).
double full_load_current(const SystemParams& sys);

/// The configuration a single-run catalog scenario simulates.
Config scenario_config(const std::string& name, const Config& base, const RunOptions& opt = {});

/// Runs one catalog entry, or the scenario stored in `base` when name is "custom".
ScenarioReport run_scenario(const std::string& name, const Config& base, const RunOptions& opt = {});

/// Every catalog entry, concurrently, followed by the conservation check
/// over all of their runs.
struct Batch {
    std::vector<ScenarioReport> reports;
    Criterion conservation;
    /// Criteria 1-9 in order, merged across the reports.
    std::vector<Criterion> criteria() const;
    bool pass() const;
};
Batch run_all(const Config& base, const RunOptions& opt = {});

/// trace_<label>.csv, gates_<label>.csv (when recorded), <plot>.csv and summary.json.
void write_report(const ScenarioReport& r, const std::filesystem::path& dir);

nlohmann::json to_json(const Criterion& c);
std::string format_line(const Criterion& c);

}  // namespace sstsim::scenarios
