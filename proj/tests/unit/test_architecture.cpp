#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <type_traits>

#include "doctest.h"
#include "sstsim/central_controller.hpp"
#include "sstsim/dab_controller.hpp"

// The module controller sees only its own bus and the LVDC voltage.
static_assert(std::is_same_v<decltype(&sstsim::dab::DabController::step), double (sstsim::dab::DabController::*)(double, double)>);

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("central controller cannot reach module state") {
    const std::filesystem::path root = SSTSIM_SOURCE_DIR;
    const std::regex inc(R"(#\s*include\s*[<"]([^>"]+)[>"])");
    for (const auto& f : {root / "include/sstsim/central_controller.hpp", root / "src/central_controller.cpp"}) {
        const std::string text = slurp(f);
        REQUIRE_FALSE(text.empty());
        for (std::sregex_iterator it(text.begin(), text.end(), inc), end; it != end; ++it) {
            const std::string h = (*it)[1];
            INFO(f.string() << " includes " << h);
            CHECK(h.find("dab_controller") == std::string::npos);
            CHECK(h.find("plant") == std::string::npos);
            CHECK(h.find("engine") == std::string::npos);
        }
        CHECK(text.find("v_mv_true") == std::string::npos);
    }
}

TEST_CASE("module controller cannot reach other modules") {
    const std::filesystem::path root = SSTSIM_SOURCE_DIR;
    for (const auto& f : {root / "include/sstsim/dab_controller.hpp", root / "src/dab_controller.cpp"}) {
        const std::string text = slurp(f);
        CHECK(text.find("central_controller") == std::string::npos);
        CHECK(text.find("engine.hpp") == std::string::npos);
        CHECK(text.find("plant.hpp") == std::string::npos);
        // no shared statics besides the pure delay helper
        CHECK(text.find("static ") == text.find("static std::size_t delay_samples"));
    }
}
