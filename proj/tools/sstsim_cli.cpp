#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sstsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Averaged multirate simulator for an ISOP MVAC-LVDC converter"};
    app.require_subcommand(1);

    sstsim::cli::RunArgs run;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int decimate = 0;
    double duration = 0.0;
    std::string resonant;

    auto* cmd_run = app.add_subcommand("run", "Run a scenario (or all of them) and write traces, summaries and plot data");
    cmd_run->add_option("scenario", run.scenario, "startup | load_step | balance | ripple | margins | determinism | all | custom")
        ->required();
    cmd_run->add_option("--config", config_path, "JSON config file (default: $SSTSIM_CONFIG, else built-in values)");
    cmd_run->add_option("--out", out_dir, "Output directory (default: runs/<scenario>-<run id>)");
    auto* seed_opt = cmd_run->add_option("--seed", seed, "Seed for the tolerance permutation");
    cmd_run->add_flag("--check", run.check, "Exit 1 when any acceptance criterion fails");
    cmd_run->add_flag("--strict", run.check, "Same as --check");
    auto* dec_opt = cmd_run->add_option("--decimate", decimate, "Plant steps per logged frame")->check(CLI::PositiveNumber);
    auto* res_opt = cmd_run->add_option("--resonant", resonant, "Resonant compensation on|off")->check(CLI::IsMember({"on", "off"}));
    auto* dur_opt = cmd_run->add_option("--duration", duration, "Override the scenario duration in seconds")->check(CLI::NonNegativeNumber);
    cmd_run->add_flag("--force", run.force, "Overwrite a non-empty output directory");

    std::string report_dir;
    bool report_strict = false;
    bool report_json = false;
    auto* cmd_report = app.add_subcommand("report", "Tabulate acceptance criteria found in a run directory");
    cmd_report->add_option("dir", report_dir, "Run directory")->required();
    cmd_report->add_flag("--strict", report_strict, "Exit 1 when any criterion fails");
    cmd_report->add_flag("--json", report_json, "Emit JSON instead of a table");

    CLI11_PARSE(app, argc, argv);

    if (*cmd_run) {
        if (!config_path.empty()) run.config_path = config_path;
        if (!out_dir.empty()) run.out_dir = out_dir;
        if (*seed_opt) run.options.seed = seed;
        if (*dec_opt) run.options.decimate = decimate;
        if (*res_opt) run.options.resonant = resonant == "on";
        if (*dur_opt) run.options.duration = duration;
        return sstsim::cli::cmd_run(run, std::cout, std::cerr);
    }
    return sstsim::cli::cmd_report(report_dir, report_strict, report_json, std::cout, std::cerr);
}
