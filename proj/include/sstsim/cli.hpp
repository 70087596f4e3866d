#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sstsim/config.hpp"
#include "sstsim/scenarios.hpp"

namespace sstsim::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3 };

struct RunArgs {
    std::string scenario;
    std::optional<std::string> config_path;
    std::optional<std::filesystem::path> out_dir;
    scenarios::RunOptions options;
    bool check = false;
    bool force = false;
};

struct RunManifest {
    std::string run_id;
    std::string scenario;
    std::string config_path;  // empty for built-in defaults
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    nlohmann::json options;
    nlohmann::json summary;  // per-scenario pass flags and criteria

    nlohmann::json to_json() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

/// 12 hex digits identifying (scenario, config, options).
std::string run_id(const std::string& scenario, const Config& cfg, const scenarios::RunOptions& opt);

nlohmann::json options_json(const scenarios::RunOptions& opt);

/// Runs a catalog scenario (or "all") and writes its outputs. Refuses a
/// non-empty output directory unless force is set.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

struct ReportRow {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string source;
    nlohmann::json detail;
};

struct Report {
    std::vector<ReportRow> rows;
    std::vector<std::string> missing;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

/// Collects criteria from summary.json files under run_dir (the directory
/// itself and its immediate subdirectories). Criteria reported by several
/// scenarios are merged into one row.
Report collect_report(const std::filesystem::path& run_dir);

int cmd_report(const std::filesystem::path& run_dir, bool strict, bool as_json, std::ostream& out, std::ostream& err);

}  // namespace sstsim::cli
