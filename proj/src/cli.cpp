#include "sstsim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace sstsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool non_empty_dir(const fs::path& p) { return fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p)); }

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << j.dump(2) << '\n';
}

json criteria_json(const std::vector<scenarios::Criterion>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back(scenarios::to_json(c));
    return a;
}

void print_criteria(const std::vector<scenarios::Criterion>& cs, std::ostream& out) {
    for (const auto& c : cs) out << scenarios::format_line(c) << '\n';
}

}  // namespace

json RunManifest::to_json() const {
    json j{{"run_id", run_id},
           {"scenario", scenario},
           {"config_path", config_path},
           {"out_dir", out_dir},
           {"options", options},
           {"summary", summary}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json options_json(const scenarios::RunOptions& opt) {
    json j = json::object();
    if (opt.resonant) j["resonant"] = *opt.resonant;
    if (opt.duration) j["duration"] = *opt.duration;
    if (opt.decimate) j["decimate"] = *opt.decimate;
    if (opt.seed) j["seed"] = *opt.seed;
    return j;
}

std::string run_id(const std::string& scenario, const Config& cfg, const scenarios::RunOptions& opt) {
    const std::string key = scenario + '\n' + sstsim::to_json(cfg).dump() + '\n' + options_json(opt).dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return std::string(buf, 12);
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    if (args.scenario != "all" && !scenarios::is_known(args.scenario)) {
        err << "unknown scenario \"" << args.scenario << "\"; expected one of: all";
        for (const auto& n : scenarios::catalog()) err << ", " << n;
        err << '\n';
        return kUsage;
    }

    Config cfg;
    const auto cfg_path = resolve_config_path(args.config_path);
    try {
        cfg = cfg_path ? load_config(*cfg_path) : default_config();
        validate(cfg);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kUsage;
    }

    RunManifest man;
    man.scenario = args.scenario;
    man.run_id = run_id(args.scenario, cfg, args.options);
    man.config_path = cfg_path.value_or("");
    man.seed = args.options.seed;
    man.options = options_json(args.options);
    const fs::path dir = args.out_dir.value_or(fs::path("runs") / (args.scenario + "-" + man.run_id));
    man.out_dir = dir.string();

    if (non_empty_dir(dir)) {
        if (!args.force) {
            err << "output directory " << dir << " is not empty; pass --force to overwrite\n";
            return kUsage;
        }
        fs::remove_all(dir);
    }

    bool pass = true;
    try {
        fs::create_directories(dir);
        if (args.scenario == "all") {
            const auto batch = scenarios::run_all(cfg, args.options);
            json per = json::object();
            for (const auto& r : batch.reports) {
                scenarios::write_report(r, dir / r.name);
                per[r.name] = r.pass();
            }
            const auto cs = batch.criteria();
            write_json(dir / "acceptance.json", {{"criteria", criteria_json(cs)}, {"pass", batch.pass()}});
            man.summary = {{"scenarios", per}, {"criteria", criteria_json(cs)}, {"pass", batch.pass()}};
            print_criteria(cs, out);
            pass = batch.pass();
        } else {
            const auto r = scenarios::run_scenario(args.scenario, cfg, args.options);
            scenarios::write_report(r, dir);
            man.summary = {{"scenarios", {{r.name, r.pass()}}}, {"criteria", criteria_json(r.criteria)}, {"pass", r.pass()}};
            print_criteria(r.criteria, out);
            pass = r.pass();
        }
        write_json(dir / "manifest.json", man.to_json());
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << '\n';
        return kRuntime;
    }
    out << "run " << man.run_id << " -> " << dir.string() << '\n';
    return (args.check && !pass) ? kCheckFailed : kOk;
}

// ---------------------------------------------------------------------------

bool Report::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

json Report::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows) {
        rows_j.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"source", r.source}, {"detail", r.detail}});
    }
    return {{"criteria", rows_j}, {"missing", missing}, {"pass", all_pass()}};
}

Report collect_report(const fs::path& run_dir) {
    Report rep;
    std::map<int, ReportRow> merged;
    auto absorb = [&](const json& crit, const std::string& source) {
        for (const auto& c : crit) {
            const int id = c.at("id").get<int>();
            auto it = merged.find(id);
            if (it == merged.end()) {
                merged[id] = {id, c.at("name").get<std::string>(), c.at("pass").get<bool>(), source, c.value("detail", json::object())};
            } else {
                it->second.pass = it->second.pass && c.at("pass").get<bool>();
                it->second.source += "," + source;
                it->second.detail[source] = c.value("detail", json::object());
            }
        }
    };

    if (!fs::is_directory(run_dir)) {
        rep.missing.push_back(run_dir.string());
        return rep;
    }
    // A batch directory carries the merged list already.
    const fs::path acceptance = run_dir / "acceptance.json";
    std::vector<fs::path> summaries;
    if (fs::exists(run_dir / "summary.json")) summaries.push_back(run_dir / "summary.json");
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(run_dir)) {
        if (e.is_directory()) subdirs.push_back(e.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& d : subdirs) {
        if (fs::exists(d / "summary.json")) summaries.push_back(d / "summary.json");
        else rep.missing.push_back((d / "summary.json").string());
    }

    // Scenarios the manifest promised but that left nothing behind.
    if (fs::exists(run_dir / "manifest.json")) {
        try {
            std::ifstream f(run_dir / "manifest.json");
            const json man = json::parse(f);
            if (man.contains("summary") && man["summary"].contains("scenarios") && man.value("scenario", "") == "all") {
                for (const auto& [name, _] : man["summary"]["scenarios"].items()) {
                    if (!fs::exists(run_dir / name / "summary.json") &&
                        std::find(rep.missing.begin(), rep.missing.end(), (run_dir / name / "summary.json").string()) == rep.missing.end()) {
                        rep.missing.push_back((run_dir / name / "summary.json").string());
                    }
                }
            }
        } catch (const std::exception&) {
            rep.missing.push_back((run_dir / "manifest.json").string() + " (unreadable)");
        }
    }

    if (fs::exists(acceptance)) {
        try {
            std::ifstream f(acceptance);
            absorb(json::parse(f).at("criteria"), "acceptance");
        } catch (const std::exception&) {
            rep.missing.push_back(acceptance.string() + " (unreadable)");
        }
    } else {
        for (const auto& s : summaries) {
            try {
                std::ifstream f(s);
                const json j = json::parse(f);
                absorb(j.at("criteria"), j.value("scenario", s.parent_path().filename().string()));
            } catch (const std::exception&) {
                rep.missing.push_back(s.string() + " (unreadable)");
            }
        }
    }
    for (auto& [_, row] : merged) rep.rows.push_back(std::move(row));
    return rep;
}

int cmd_report(const fs::path& run_dir, bool strict, bool as_json, std::ostream& out, std::ostream& err) {
    const Report rep = collect_report(run_dir);
    if (as_json) {
        out << rep.to_json().dump(2) << '\n';
    } else {
        out << std::left << std::setw(4) << "id" << std::setw(26) << "criterion" << std::setw(6) << "pass"
            << "source\n";
        for (const auto& r : rep.rows) {
            out << std::left << std::setw(4) << r.id << std::setw(26) << r.name << std::setw(6) << (r.pass ? "yes" : "NO")
                << r.source << '\n';
        }
        out << rep.rows.size() << " criteria, " << std::count_if(rep.rows.begin(), rep.rows.end(), [](const ReportRow& r) { return !r.pass; })
            << " failing\n";
    }
    for (const auto& m : rep.missing) err << "missing: " << m << '\n';
    return (strict && !rep.all_pass()) ? kCheckFailed : kOk;
}

}  // namespace sstsim::cli
