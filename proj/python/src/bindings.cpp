#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sstsim/config.hpp"
#include "sstsim/engine.hpp"
#include "sstsim/freqdomain.hpp"
#include "sstsim/scenarios.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace sstsim;

// JSON crosses the boundary as text; the Python side parses it.
namespace {

Config parse_config(const std::string& text) {
    return text.empty() ? default_config() : config_from_json(json::parse(text));
}

scenarios::RunOptions parse_options(const std::string& text) {
    scenarios::RunOptions o;
    if (text.empty()) return o;
    const json j = json::parse(text);
    if (j.contains("resonant")) o.resonant = j["resonant"].get<bool>();
    if (j.contains("duration")) o.duration = j["duration"].get<double>();
    if (j.contains("decimate")) o.decimate = j["decimate"].get<int>();
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    return o;
}

py::dict trace_dict(const sim::Trace& tr) {
    py::dict d;
    for (const auto& name : tr.columns()) {
        const auto& c = tr.col(name);
        d[py::str(name)] = py::array_t<double>(static_cast<py::ssize_t>(c.size()), c.data());
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Averaged multirate simulator for an ISOP MVAC-LVDC converter";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("default_config_json", [] { return to_json(default_config()).dump(); });
    m.def("normalise_config_json", [](const std::string& text) {
        const Config c = parse_config(text);
        validate(c);
        return to_json(c).dump();
    });
    m.def("blocking_resonance", [](const std::string& cfg) { return blocking_resonance(parse_config(cfg).spm); });
    m.def("catalog", [] { return scenarios::catalog(); });

    m.def(
        "margins_json",
        [](const std::string& cfg, bool resonant) {
            const Config c = parse_config(cfg);
            freq::GmvdcOptions o;
            o.resonant = resonant;
            const auto r = freq::analyse(freq::gmvdc_loop(c.spm, c.dab_gains, o));
            json j{{"crossover_hz", nullptr}, {"phase_margin_deg", nullptr}, {"gain_margin_db", nullptr}};
            if (r.crossover_hz) j["crossover_hz"] = *r.crossover_hz;
            if (r.phase_margin_deg) j["phase_margin_deg"] = *r.phase_margin_deg;
            if (r.gain_margin_db) j["gain_margin_db"] = *r.gain_margin_db;
            return j.dump();
        },
        py::arg("config") = "", py::arg("resonant") = true);

    m.def(
        "simulate",
        [](const std::string& cfg) {
            const Config c = parse_config(cfg);
            validate(c);
            sim::RunResult r;
            {
                py::gil_scoped_release nogil;
                r = sim::Simulator(c).run();
            }
            return py::make_tuple(trace_dict(r.trace), r.summary(c.system.p_rated).dump());
        },
        py::arg("config") = "");

    m.def(
        "run_scenario",
        [](const std::string& name, const std::string& cfg, const std::string& opts) {
            const Config c = parse_config(cfg);
            const auto o = parse_options(opts);
            scenarios::ScenarioReport rep;
            {
                py::gil_scoped_release nogil;
                rep = scenarios::run_scenario(name, c, o);
            }
            py::dict traces;
            for (const auto& run : rep.runs) traces[py::str(run.label)] = trace_dict(run.result.trace);
            return py::make_tuple(rep.summary().dump(), traces);
        },
        py::arg("name"), py::arg("config") = "", py::arg("options") = "");
}
