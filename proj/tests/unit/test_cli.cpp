#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sstsim/cli.hpp"

using namespace sstsim;
using namespace sstsim::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("sstsim_cli_" + name);
    fs::remove_all(p);
    return p;
}

void write(const fs::path& p, const nlohmann::json& j) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump();
}

nlohmann::json crit(int id, const std::string& name, bool pass) {
    return {{"id", id}, {"name", name}, {"pass", pass}, {"detail", nlohmann::json::object()}};
}

}  // namespace

TEST_CASE("run id depends on scenario, config and options only") {
    const Config c = default_config();
    scenarios::RunOptions o;
    const auto a = run_id("startup", c, o);
    CHECK(a.size() == 12);
    CHECK(a == run_id("startup", c, o));
    CHECK(a != run_id("ripple", c, o));
    o.seed = 3;
    CHECK(a != run_id("startup", c, o));
    Config d = c;
    d.system.c_lv = 0.05;
    CHECK(a != run_id("startup", d, {}));
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("report on an empty directory") {
    const auto dir = scratch("empty");
    fs::create_directories(dir);
    std::ostringstream out, err;
    CHECK(cmd_report(dir, true, false, out, err) == kOk);
    CHECK(collect_report(dir).rows.empty());
    CHECK(out.str().find("0 criteria") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("report merges scenarios and honours --strict") {
    const auto dir = scratch("mixed");
    write(dir / "a" / "summary.json", {{"scenario", "a"}, {"criteria", {crit(1, "margins", true), crit(7, "conservation", true)}}});
    write(dir / "b" / "summary.json", {{"scenario", "b"}, {"criteria", {crit(4, "balance", false), crit(7, "conservation", false)}}});
    fs::create_directories(dir / "c");  // left nothing behind

    const auto rep = collect_report(dir);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].id == 1);
    CHECK(rep.rows[2].id == 7);
    CHECK_FALSE(rep.rows[2].pass);
    CHECK(rep.rows[2].source == "a,b");
    CHECK(rep.missing.size() == 1);

    std::ostringstream out, err;
    CHECK(cmd_report(dir, false, false, out, err) == kOk);
    CHECK(cmd_report(dir, true, false, out, err) == kCheckFailed);
    std::ostringstream js;
    cmd_report(dir, false, true, js, err);
    CHECK(nlohmann::json::parse(js.str()).at("pass") == false);
    fs::remove_all(dir);
}

TEST_CASE("run refuses unknown scenarios and non-empty output") {
    std::ostringstream out, err;
    RunArgs a;
    a.scenario = "nonsense";
    CHECK(cmd_run(a, out, err) == kUsage);
    CHECK(err.str().find("unknown scenario") != std::string::npos);

    const auto dir = scratch("occupied");
    fs::create_directories(dir);
    std::ofstream(dir / "keep.txt") << "x";
    a.scenario = "margins";
    a.out_dir = dir;
    CHECK(cmd_run(a, out, err) == kUsage);
    CHECK(fs::exists(dir / "keep.txt"));
    fs::remove_all(dir);
}

TEST_CASE("margins run writes a manifest and a readable summary") {
    const auto dir = scratch("margins");
    RunArgs a;
    a.scenario = "margins";
    a.out_dir = dir;
    a.check = true;
    std::ostringstream out, err;
    CHECK(cmd_run(a, out, err) == kOk);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    std::ifstream mf(dir / "manifest.json");
    const auto man = nlohmann::json::parse(mf);
    CHECK(man.at("run_id") == run_id("margins", default_config(), {}));
    const auto rep = collect_report(dir);
    CHECK_FALSE(rep.rows.empty());
    CHECK(rep.all_pass());

    // --force replaces it
    a.force = true;
    CHECK(cmd_run(a, out, err) == kOk);
    fs::remove_all(dir);
}

TEST_CASE("bad config is a usage error") {
    const auto dir = scratch("badcfg");
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << R"({"system": {"n_blocks": 0}})";
    RunArgs a;
    a.scenario = "margins";
    a.config_path = (dir / "cfg.json").string();
    a.out_dir = dir / "out";
    std::ostringstream out, err;
    CHECK(cmd_run(a, out, err) == kUsage);
    CHECK(err.str().find("n_blocks") != std::string::npos);
    fs::remove_all(dir);
}
