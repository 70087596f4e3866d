#include "sstsim/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "sstsim/freqdomain.hpp"
#include "sstsim/metrics.hpp"

namespace sstsim::scenarios {

namespace {

using nlohmann::json;

// Acceptance thresholds.
constexpr double kCrossoverHz = 643.0, kCrossoverTol = 20.0;
constexpr double kPhaseMarginDeg = 55.0, kPhaseMarginTol = 5.0;
constexpr double kGainMarginDb = 10.0, kGainMarginTol = 1.0;
constexpr double kMarginRuntimeS = 1.0;
constexpr double kBlockingHz = 6.19e3, kBlockingRelTol = 0.01;
constexpr double kBlockingLo = 2e3, kBlockingHi = 10e3;
constexpr double kRippleOnMax = 5.0;
constexpr double kRippleRatioMin = 8.0;
constexpr double kRippleBandLo = 40.0, kRippleBandHi = 130.0;
constexpr double kRippleRuntimeS = 120.0;
constexpr double kBalanceVmvFrac = 0.01;
constexpr double kBalancePdabFrac = 0.02;
constexpr double kSettleBand = 0.01;
constexpr double kSettleTime = 0.2;
constexpr double kMaxDeviation = 0.08;
constexpr double kRatedPeakPinned = 87.5;
constexpr double kInrushFactor = 1.5;
constexpr double kInrushWindow = 0.1;
constexpr double kFinalBand = 0.01;
constexpr double kResidualFrac = 1e-3;
constexpr double kPirPhaseDeg = 1.0, kPirMagDb = 0.2, kPirFmax = 2e3;
constexpr double kConvergenceRel = 1e-4;

// Scenario timelines.
constexpr double kStartupDuration = 2.0;
constexpr double kStepOn = 0.2, kStepOff = 0.7, kLoadStepDuration = 1.2;
constexpr double kBalanceDrop = 0.6, kBalanceRise = 0.9, kBalanceDuration = 1.3;
constexpr double kBalanceSteady0 = 0.4;
constexpr double kRippleDuration = 1.0, kRippleWindow = 0.5;
constexpr double kDeterminismDuration = 0.3, kDeterminismStep = 0.1;
constexpr double kConvergenceDuration = 0.5, kConvergenceWindow = 0.2;
constexpr std::uint64_t kDeterminismSeed = 7;

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string idx(int k) {
    std::string s = std::to_string(k);
    return s.size() < 2 ? "0" + s : s;
}

NamedRun simulate(std::string label, const Config& cfg) {
    NamedRun r;
    r.label = std::move(label);
    r.config = cfg;
    const auto t0 = std::chrono::steady_clock::now();
    sim::Simulator s(cfg);
    r.result = s.run();
    r.wall_s = since(t0);
    return r;
}

void apply_options(Config& c, const RunOptions& opt) {
    if (opt.resonant) c.scenario.resonant_enabled = *opt.resonant;
    if (opt.duration) c.scenario.duration = *opt.duration;
    if (opt.decimate) c.scenario.decimate = *opt.decimate;
}

void require_complete(const NamedRun& r) {
    if (r.result.aborted) throw std::runtime_error(r.label + ": simulation aborted: " + r.result.abort_reason);
}

sim::Trace select(const sim::Trace& tr, const std::vector<std::string>& cols) {
    sim::Trace out(cols);
    std::vector<const std::vector<double>*> src;
    for (const auto& c : cols) src.push_back(&tr.col(c));
    std::vector<double> row(cols.size());
    for (std::size_t r = 0; r < tr.rows(); ++r) {
        for (std::size_t i = 0; i < src.size(); ++i) row[i] = (*src[i])[r];
        out.add_row(row);
    }
    return out;
}

double max_ripple(const sim::Trace& tr, int m, double f, double window, int* worst = nullptr) {
    double mx = 0.0;
    for (int k = 0; k < m; ++k) {
        const double r = metrics::ripple_metric(tr, "vmv_" + idx(k), f, window);
        if (r > mx) {
            mx = r;
            if (worst) *worst = k;
        }
    }
    return mx;
}

Criterion conservation_check(const std::vector<const NamedRun*>& runs, double p_rated) {
    Criterion c{7, "conservation", true, json::object()};
    double worst = 0.0;
    std::string where;
    for (const auto* r : runs) {
        c.detail["runs"][r->label] = r->result.energy_residual_max_w;
        if (r->result.energy_residual_max_w >= worst) {
            worst = r->result.energy_residual_max_w;
            where = r->label;
        }
        if (r->result.aborted) c.pass = false;
    }
    c.detail["max_residual_w"] = worst;
    c.detail["max_residual_rel"] = worst / p_rated;
    c.detail["limit_rel"] = kResidualFrac;
    c.detail["worst_run"] = where;
    c.pass = c.pass && worst < kResidualFrac * p_rated;
    return c;
}

void add_conservation(ScenarioReport& rep) {
    std::vector<const NamedRun*> runs;
    for (const auto& r : rep.runs) runs.push_back(&r);
    if (!runs.empty()) rep.criteria.push_back(conservation_check(runs, rep.runs.front().config.system.p_rated));
}

json step_json(const metrics::StepResponse& s, double v_ref) {
    return {{"settle_time_s", s.settle_time},
            {"max_deviation_v", s.max_deviation},
            {"max_deviation_rel", s.max_deviation / v_ref},
            {"settled", s.settled}};
}

// ---------------------------------------------------------------------------

ScenarioReport margins_report(const Config& base) {
    ScenarioReport rep;
    rep.name = "margins";
    const auto& spm = base.spm;
    const auto& g = base.dab_gains;

    const auto t0 = std::chrono::steady_clock::now();
    const auto resp = freq::analyse(freq::gmvdc_loop(spm, g));
    const double runtime = since(t0);

    sim::Trace plot({"freq_hz", "mag_db", "phase_deg"});
    for (std::size_t i = 0; i < resp.freqs.size(); ++i) {
        plot.add_row({resp.freqs[i], 20.0 * std::log10(std::abs(resp.values[i])), resp.phase_deg[i]});
    }
    rep.plots.push_back({"plot_bode", std::move(plot)});

    const double fc = resp.crossover_hz.value_or(NAN);
    const double pm = resp.phase_margin_deg.value_or(NAN);
    const double gm = resp.gain_margin_db.value_or(NAN);
    rep.metrics["crossover_hz"] = fc;
    rep.metrics["phase_margin_deg"] = pm;
    rep.metrics["gain_margin_db"] = gm;
    rep.metrics["phase_crossover_hz"] = resp.phase_crossover_hz.value_or(NAN);
    rep.metrics["runtime_s"] = runtime;
    rep.metrics["annotations"] = resp.annotations;

    Criterion c1{1, "margins", false, json::object()};
    c1.detail = {{"crossover_hz", fc}, {"phase_margin_deg", pm}, {"gain_margin_db", gm}, {"runtime_s", runtime}};
    c1.pass = std::abs(fc - kCrossoverHz) <= kCrossoverTol && std::abs(pm - kPhaseMarginDeg) <= kPhaseMarginTol &&
              std::abs(gm - kGainMarginDb) <= kGainMarginTol && runtime < kMarginRuntimeS;
    rep.criteria.push_back(c1);

    const double fr = blocking_resonance(spm);
    rep.metrics["blocking_resonance_hz"] = fr;
    Criterion c2{2, "blocking_resonance", false, {{"f_r_hz", fr}, {"target_hz", kBlockingHz}}};
    c2.pass = std::abs(fr - kBlockingHz) <= kBlockingRelTol * kBlockingHz && fr > kBlockingLo && fr < kBlockingHi;
    rep.criteria.push_back(c2);

    const auto mis = freq::pir_discretisation_error(g, spm.phase_limit(), kPirFmax);
    rep.metrics["pir_phase_err_deg"] = mis.max_phase_err_deg;
    rep.metrics["pir_mag_err_db"] = mis.max_mag_err_db;
    Criterion c8{8, "discrete_consistency", false, json::object()};
    c8.detail = {{"max_phase_err_deg", mis.max_phase_err_deg},
                 {"worst_phase_hz", mis.worst_phase_hz},
                 {"max_mag_err_db", mis.max_mag_err_db},
                 {"worst_mag_hz", mis.worst_mag_hz}};
    c8.pass = mis.max_phase_err_deg <= kPirPhaseDeg && mis.max_mag_err_db <= kPirMagDb;
    rep.criteria.push_back(c8);

    const auto audit = freq::timescale_audit(fc, base.system.lvdc_bw_hz, g.omega_ref);
    rep.metrics["timescale"] = {{"ratio", audit.ratio},
                                {"ref_hz", audit.ref_hz},
                                {"ref_target_hz", audit.ref_target_hz},
                                {"pass", audit.pass},
                                {"violations", audit.violations}};

    // The same loop at the rated operating point, for information.
    freq::GmvdcOptions loaded;
    loaded.operating_phi = plant::phase_for_power(spm.p_rated, spm.v_lv_nom, spm.v_mv_nom, spm);
    const auto rated = freq::analyse(freq::gmvdc_loop(spm, g, loaded));
    rep.metrics["rated_load"] = {{"crossover_hz", rated.crossover_hz.value_or(NAN)},
                                 {"phase_margin_deg", rated.phase_margin_deg.value_or(NAN)},
                                 {"gain_margin_db", rated.gain_margin_db.value_or(NAN)}};
    return rep;
}

ScenarioReport startup_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = "startup";
    rep.runs.push_back(simulate("startup", scenario_config("startup", base, opt)));
    const auto& run = rep.runs.back();
    require_complete(run);
    const auto& r = run.result;
    const auto& tr = r.trace;
    const auto& sys = run.config.system;

    const auto& t = tr.col("t");
    const auto& v = tr.col("v_lv");
    const std::vector<const std::vector<double>*> cur{&tr.col("ia"), &tr.col("ib"), &tr.col("ic")};
    const double t_open = r.first_event("precharge_disconnect");
    const double t_close = r.first_event("breaker_close");
    bool reached_nominal = false;
    double t_nominal = -1.0;
    for (const auto& p : r.transitions) {
        if (p.phase == central::StartupPhase::Nominal) {
            reached_nominal = true;
            t_nominal = p.t;
        }
    }

    double pre_close_max = 0.0;
    double post_close_peak = 0.0;
    double droop_max_rise = -INFINITY;
    std::size_t droop_frames = 0;
    double v_open = NAN, v_close = NAN;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const bool before = t_close < 0.0 || t[i] < t_close;
        for (const auto* c : cur) {
            const double a = std::abs((*c)[i]);
            if (before) pre_close_max = std::max(pre_close_max, a);
            else if (t[i] <= t_close + kInrushWindow) post_close_peak = std::max(post_close_peak, a);
        }
        if (i > 0 && t_open >= 0.0 && t_close >= 0.0 && t[i - 1] >= t_open && t[i] <= t_close) {
            droop_max_rise = std::max(droop_max_rise, v[i] - v[i - 1]);
            if (droop_frames == 0) v_open = v[i - 1];
            v_close = v[i];
            ++droop_frames;
        }
    }
    const double v_ref = sys.v_lv_ref;
    const double rated_peak = std::sqrt(2.0) * sys.s_rated / (std::sqrt(3.0) * sys.v_grid_ll);
    const double droop = v_open - v_close;

    rep.metrics = run.result.summary(sys.p_rated);
    rep.metrics["t_nominal"] = t_nominal;
    rep.metrics["t_precharge_disconnect"] = t_open;
    rep.metrics["t_breaker_close"] = t_close;
    rep.metrics["pre_close_max_line_current_a"] = pre_close_max;
    rep.metrics["post_close_peak_line_current_a"] = post_close_peak;
    rep.metrics["post_close_peak_per_rated_peak"] = post_close_peak / rated_peak;
    rep.metrics["droop_v"] = droop;
    rep.metrics["droop_max_rise_v"] = droop_max_rise;
    rep.metrics["final_v_lv"] = r.final_v_lv;

    Criterion c6{6, "soft_startup", false, json::object()};
    const bool completed = reached_nominal && !r.startup_aborted;
    const bool zero_before = pre_close_max == 0.0;
    const bool inrush_ok = t_close >= 0.0 && post_close_peak <= kInrushFactor * kRatedPeakPinned;
    const bool monotone = droop_frames > 0 && droop_max_rise < 0.0;
    const bool final_ok = std::abs(r.final_v_lv - v_ref) <= kFinalBand * v_ref;
    c6.detail = {{"completed", completed},
                 {"zero_current_before_close", zero_before},
                 {"post_close_peak_a", post_close_peak},
                 {"post_close_limit_a", kInrushFactor * kRatedPeakPinned},
                 {"droop_monotone", monotone},
                 {"droop_frames", droop_frames},
                 {"droop_v", droop},
                 {"final_v_lv", r.final_v_lv},
                 {"final_within_1pct", final_ok}};
    c6.pass = completed && zero_before && inrush_ok && monotone && final_ok;
    rep.criteria.push_back(c6);

    // Start-up panels: grid quantities, v_lv, and the first three-phase block's
    // MVDC voltages and LV-side DAB currents.
    std::vector<std::string> cols{"t", "v_lv", "va", "vb", "vc", "ia", "ib", "ic"};
    const int nb = sys.n_blocks;
    for (int ph = 0; ph < 3; ++ph) cols.push_back("vmv_" + idx(ph * nb));
    for (int ph = 0; ph < 3; ++ph) cols.push_back("idab_" + idx(ph * nb));
    cols.emplace_back("phase");
    sim::Trace fig(cols);
    std::vector<double> row(cols.size());
    for (std::size_t i = 0; i < tr.rows(); ++i) {
        std::size_t j = 0;
        for (std::size_t c = 0; c < 8 + 3; ++c) row[j++] = tr.col(cols[c])[i];
        for (int ph = 0; ph < 3; ++ph) row[j++] = v[i] > 1.0 ? tr.col("pdab_" + idx(ph * nb))[i] / v[i] : 0.0;
        row[j] = tr.col("phase")[i];
        fig.add_row(row);
    }
    rep.plots.push_back({"plot_startup", std::move(fig)});
    add_conservation(rep);
    return rep;
}

ScenarioReport load_step_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = "load_step";
    rep.runs.push_back(simulate("load_step", scenario_config("load_step", base, opt)));
    const auto& run = rep.runs.back();
    require_complete(run);
    const auto& tr = run.result.trace;
    const double v_ref = run.config.system.v_lv_ref;
    const double t_end = run.result.t_end;

    const auto on = metrics::step_response(tr, "v_lv", kStepOn, std::min(kStepOff, t_end), v_ref, kSettleBand * v_ref);
    const auto off = metrics::step_response(tr, "v_lv", kStepOff, t_end, v_ref, kSettleBand * v_ref);
    rep.metrics = run.result.summary(run.config.system.p_rated);
    rep.metrics["steps"] = {{"no_load_to_full", step_json(on, v_ref)}, {"full_to_no_load", step_json(off, v_ref)}};

    auto ok = [&](const metrics::StepResponse& s) {
        return s.settled && s.settle_time <= kSettleTime && s.max_deviation < kMaxDeviation * v_ref;
    };
    Criterion c5{5, "load_steps", ok(on) && ok(off), rep.metrics["steps"]};
    rep.criteria.push_back(c5);

    rep.plots.push_back({"plot_load_step", select(tr, {"t", "v_lv", "i_lv", "va", "vb", "vc", "ia", "ib", "ic", "pgref"})});
    add_conservation(rep);
    return rep;
}

json balance_json(const metrics::Balance& b) {
    json phases = json::array();
    for (const auto& p : b.phases) phases.push_back({{"vmv_spread_v", p.vmv_spread}, {"pdab_spread_w", p.pdab_spread}});
    return {{"max_vmv_spread_v", b.max_vmv_spread},
            {"max_pdab_spread_w", b.max_pdab_spread},
            {"max_cross_phase_vmv_v", b.max_cross_phase_vmv},
            {"phases", phases}};
}

ScenarioReport balance_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = "balance";
    rep.runs.push_back(simulate("balance", scenario_config("balance", base, opt)));
    const auto& run = rep.runs.back();
    require_complete(run);
    const auto& tr = run.result.trace;
    const int nb = run.config.system.n_blocks;
    const double t_end = run.result.t_end;

    const auto steady = metrics::balance_metric(tr, nb, kBalanceSteady0, std::min(kBalanceDrop, t_end));
    const auto transient = metrics::balance_metric(tr, nb, kBalanceDrop, t_end);
    const double vmv_limit = kBalanceVmvFrac * run.config.spm.v_mv_nom;
    const double pdab_limit = kBalancePdabFrac * run.config.spm.p_rated;

    rep.metrics = run.result.summary(run.config.system.p_rated);
    rep.metrics["steady"] = balance_json(steady);
    rep.metrics["transient"] = balance_json(transient);
    rep.metrics["l_multipliers"] = run.config.tolerances.l_multipliers;
    rep.metrics["c_mv_multipliers"] = run.config.tolerances.c_mv_multipliers;

    Criterion c4{4, "balance", false, json::object()};
    const bool s_v = steady.max_vmv_spread < vmv_limit;
    const bool s_p = steady.max_pdab_spread < pdab_limit;
    const bool t_v = transient.max_vmv_spread < vmv_limit;
    const bool t_p = transient.max_pdab_spread < pdab_limit;
    c4.detail = {{"steady_vmv_spread_v", steady.max_vmv_spread},
                 {"steady_pdab_spread_w", steady.max_pdab_spread},
                 {"transient_vmv_spread_v", transient.max_vmv_spread},
                 {"transient_pdab_spread_w", transient.max_pdab_spread},
                 {"vmv_limit_v", vmv_limit},
                 {"pdab_limit_w", pdab_limit},
                 {"steady_vmv_ok", s_v},
                 {"steady_pdab_ok", s_p},
                 {"transient_vmv_ok", t_v},
                 {"transient_pdab_ok", t_p}};
    c4.pass = s_v && s_p && t_v && t_p;
    rep.criteria.push_back(c4);

    std::vector<std::string> cols{"t"};
    for (const char* p : {"vmv_", "pdab_"}) {
        for (int k = 0; k < run.config.system.n_modules(); ++k) cols.push_back(p + idx(k));
    }
    rep.plots.push_back({"plot_balance", select(tr, cols)});
    add_conservation(rep);
    return rep;
}

ScenarioReport ripple_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = "ripple";
    RunOptions o = opt;
    o.resonant.reset();
    Config on = scenario_config("ripple", base, o);
    Config off = on;
    on.scenario.resonant_enabled = true;
    off.scenario.resonant_enabled = false;
    on.scenario.name = "ripple_resonant_on";
    off.scenario.name = "ripple_resonant_off";

    auto fut = std::async(std::launch::async, [&] { return simulate("resonant_off", off); });
    NamedRun r_on = simulate("resonant_on", on);
    NamedRun r_off = fut.get();
    require_complete(r_on);
    require_complete(r_off);

    const int m = on.system.n_modules();
    const double f2 = 2.0 * on.system.omega_0 / kTwoPi;
    const double window = std::min(kRippleWindow, 0.5 * r_on.result.t_end);
    int worst_on = 0, worst_off = 0;
    const double pp_on = max_ripple(r_on.result.trace, m, f2, window, &worst_on);
    const double pp_off = max_ripple(r_off.result.trace, m, f2, window, &worst_off);
    const double ratio = pp_off / pp_on;

    rep.metrics["f_target_hz"] = f2;
    rep.metrics["window_s"] = window;
    rep.metrics["resonant_on"] = r_on.result.summary(on.system.p_rated);
    rep.metrics["resonant_on"]["ripple_pp_v"] = pp_on;
    rep.metrics["resonant_on"]["worst_module"] = worst_on;
    rep.metrics["resonant_on"]["v_lv_ripple_pp_v"] = metrics::ripple_metric(r_on.result.trace, "v_lv", f2, window);
    rep.metrics["resonant_on"]["runtime_s"] = r_on.wall_s;
    rep.metrics["resonant_off"] = r_off.result.summary(off.system.p_rated);
    rep.metrics["resonant_off"]["ripple_pp_v"] = pp_off;
    rep.metrics["resonant_off"]["worst_module"] = worst_off;
    rep.metrics["resonant_off"]["v_lv_ripple_pp_v"] = metrics::ripple_metric(r_off.result.trace, "v_lv", f2, window);
    rep.metrics["resonant_off"]["runtime_s"] = r_off.wall_s;
    rep.metrics["ratio"] = ratio;

    const bool band = pp_off >= kRippleBandLo && pp_off <= kRippleBandHi;
    const double runtime = std::max(r_on.wall_s, r_off.wall_s);
    Criterion c3{3, "ripple", false, json::object()};
    c3.detail = {{"ripple_on_pp_v", pp_on},
                 {"ripple_off_pp_v", pp_off},
                 {"ratio", ratio},
                 {"band_advisory_ok", band},
                 {"runtime_s", runtime}};
    c3.pass = pp_on < kRippleOnMax && ratio >= kRippleRatioMin && runtime < kRippleRuntimeS;
    rep.criteria.push_back(c3);

    const auto& a = r_on.result.trace;
    const auto& b = r_off.result.trace;
    const std::size_t rows = std::min(a.rows(), b.rows());
    sim::Trace plot({"t", "vmv_00_on", "vmv_00_off", "v_lv_on", "v_lv_off", "pdab_00_on", "pdab_00_off"});
    for (std::size_t i = 0; i < rows; ++i) {
        plot.add_row({a.col("t")[i], a.col("vmv_00")[i], b.col("vmv_00")[i], a.col("v_lv")[i], b.col("v_lv")[i],
                      a.col("pdab_00")[i], b.col("pdab_00")[i]});
    }
    rep.plots.push_back({"plot_ripple", std::move(plot)});

    rep.runs.push_back(std::move(r_on));
    rep.runs.push_back(std::move(r_off));
    add_conservation(rep);
    return rep;
}

std::vector<std::pair<std::string, double>> steady_values(const NamedRun& r, double t0, double t1) {
    const auto& tr = r.result.trace;
    const int m = r.config.system.n_modules();
    const double f2 = 2.0 * r.config.system.omega_0 / kTwoPi;
    double vmv = 0.0, pdab = 0.0;
    for (int k = 0; k < m; ++k) {
        vmv += metrics::window_mean(tr, "vmv_" + idx(k), t0, t1);
        pdab += metrics::window_mean(tr, "pdab_" + idx(k), t0, t1);
    }
    return {{"final_v_lv", r.result.final_v_lv},
            {"mean_v_lv", metrics::window_mean(tr, "v_lv", t0, t1)},
            {"mean_v_mv", vmv / m},
            {"mean_p_dab_total", pdab},
            {"ripple_off_pp", max_ripple(tr, m, f2, t1 - t0)}};
}

ScenarioReport determinism_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = "determinism";
    const Config cfg = scenario_config("determinism", base, opt);

    auto fa = std::async(std::launch::async, [&] { return simulate("rerun_a", cfg); });
    auto fb = std::async(std::launch::async, [&] { return simulate("rerun_b", cfg); });
    NamedRun a = fa.get();
    NamedRun b = fb.get();
    const std::string csv_a = sim::to_csv(a.result.trace);
    const std::string csv_b = sim::to_csv(b.result.trace);
    const bool identical = csv_a == csv_b && a.result.summary(cfg.system.p_rated).dump() == b.result.summary(cfg.system.p_rated).dump();

    // Convergence: same steady full-load operation at dt and dt/2. The
    // resonant compensation is off so the ripple figure is well above the
    // numerical floor.
    Config coarse = base;
    coarse.scenario = ScenarioSpec{};
    coarse.scenario.name = "convergence";
    coarse.scenario.duration = kConvergenceDuration;
    coarse.scenario.resonant_enabled = false;
    coarse.scenario.load_profile.steps = {{0.0, full_load_current(base.system), LoadKind::Current}};
    coarse.scenario.dt_plant = base.scenario.dt_plant;
    coarse.scenario.decimate = 100;
    coarse.scenario.record_gates = false;
    Config fine = coarse;
    fine.scenario.dt_plant = 0.5 * coarse.scenario.dt_plant;
    fine.scenario.decimate = 2 * coarse.scenario.decimate;

    auto fc = std::async(std::launch::async, [&] { return simulate("dt", coarse); });
    NamedRun r_fine = simulate("dt_half", fine);
    NamedRun r_coarse = fc.get();
    require_complete(r_coarse);
    require_complete(r_fine);

    const double t1 = kConvergenceDuration;
    const double t0 = t1 - kConvergenceWindow;
    const auto vc = steady_values(r_coarse, t0, t1);
    const auto vf = steady_values(r_fine, t0, t1);
    json conv = json::object();
    double worst = 0.0;
    for (std::size_t i = 0; i < vc.size(); ++i) {
        const double rel = std::abs(vf[i].second - vc[i].second) / std::max(std::abs(vc[i].second), 1e-12);
        conv[vc[i].first] = {{"dt", vc[i].second}, {"dt_half", vf[i].second}, {"rel_change", rel}};
        worst = std::max(worst, rel);
    }
    rep.metrics["byte_identical"] = identical;
    rep.metrics["trace_bytes"] = csv_a.size();
    rep.metrics["convergence"] = conv;
    rep.metrics["convergence_worst_rel"] = worst;

    Criterion c9{9, "determinism_convergence", identical && worst < kConvergenceRel, json::object()};
    c9.detail = {{"byte_identical", identical}, {"convergence_worst_rel", worst}, {"limit_rel", kConvergenceRel}};
    rep.criteria.push_back(c9);

    rep.runs.push_back(std::move(a));
    rep.runs.push_back(std::move(b));
    rep.runs.push_back(std::move(r_coarse));
    rep.runs.push_back(std::move(r_fine));
    add_conservation(rep);
    return rep;
}

ScenarioReport custom_report(const Config& base, const RunOptions& opt) {
    ScenarioReport rep;
    rep.name = base.scenario.name.empty() ? "custom" : base.scenario.name;
    Config cfg = base;
    apply_options(cfg, opt);
    if (opt.seed) cfg.tolerances = ToleranceSpec::ladder(cfg.system.n_modules(), opt.seed);
    rep.runs.push_back(simulate(rep.name, cfg));
    rep.metrics = rep.runs.back().result.summary(cfg.system.p_rated);
    add_conservation(rep);
    return rep;
}

}  // namespace

bool ScenarioReport::pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

json to_json(const Criterion& c) { return {{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}}; }

std::string format_line(const Criterion& c) {
    std::ostringstream os;
    os << (c.pass ? "PASS" : "FAIL") << "  " << c.id << " " << c.name << "  " << c.detail.dump();
    return os.str();
}

json ScenarioReport::summary() const {
    json crit = json::array();
    for (const auto& c : criteria) crit.push_back(to_json(c));
    json runs_j = json::array();
    for (const auto& r : runs) {
        runs_j.push_back({{"label", r.label},
                          {"wall_s", r.wall_s},
                          {"frames", r.result.trace.rows()},
                          {"aborted", r.result.aborted},
                          {"energy_residual_max_w", r.result.energy_residual_max_w}});
    }
    return {{"scenario", name}, {"pass", pass()}, {"metrics", metrics}, {"criteria", crit}, {"runs", runs_j}};
}

const std::vector<std::string>& catalog() {
    static const std::vector<std::string> names{"startup", "load_step", "balance", "ripple", "margins", "determinism"};
    return names;
}

bool is_known(const std::string& name) {
    const auto& c = catalog();
    return name == "custom" || std::find(c.begin(), c.end(), name) != c.end();
}

double full_load_current(const SystemParams& sys) { return sys.p_rated / sys.v_lv_ref; }

Config scenario_config(const std::string& name, const Config& base, const RunOptions& opt) {
    Config c = base;
    const double full = full_load_current(base.system);
    ScenarioSpec s;
    s.dt_plant = base.scenario.dt_plant;
    s.decimate = base.scenario.decimate;
    s.modulation = base.scenario.modulation;
    s.timing = base.scenario.timing;
    s.ready_latency = base.scenario.ready_latency;
    s.name = name;
    if (name == "startup") {
        s.duration = kStartupDuration;
        s.startup_enabled = true;
        // 700 W per module at the nominal MVDC voltage.
        s.load_profile.mvdc_bleed_r = base.spm.v_mv_nom * base.spm.v_mv_nom / 700.0;
    } else if (name == "load_step") {
        s.duration = kLoadStepDuration;
        s.load_profile.steps = {{0.0, 0.0, LoadKind::Current}, {kStepOn, full, LoadKind::Current}, {kStepOff, 0.0, LoadKind::Current}};
    } else if (name == "balance") {
        s.duration = kBalanceDuration;
        s.load_profile.steps = {{0.0, full, LoadKind::Current}, {kBalanceDrop, 0.0, LoadKind::Current}, {kBalanceRise, full, LoadKind::Current}};
        c.tolerances = ToleranceSpec::ladder(base.system.n_modules(), opt.seed);
    } else if (name == "ripple") {
        s.duration = kRippleDuration;
        s.load_profile.steps = {{0.0, full, LoadKind::Current}};
    } else if (name == "determinism") {
        s.duration = kDeterminismDuration;
        s.load_profile.steps = {{0.0, 0.5 * full, LoadKind::Current}, {kDeterminismStep, full, LoadKind::Current}};
        c.tolerances = ToleranceSpec::ladder(base.system.n_modules(), opt.seed.value_or(kDeterminismSeed));
    } else {
        throw ConfigError("scenario \"" + name + "\" has no single-run configuration");
    }
    c.scenario = s;
    apply_options(c, opt);
    validate(c);
    return c;
}

ScenarioReport run_scenario(const std::string& name, const Config& base, const RunOptions& opt) {
    if (name == "margins") return margins_report(base);
    if (name == "startup") return startup_report(base, opt);
    if (name == "load_step") return load_step_report(base, opt);
    if (name == "balance") return balance_report(base, opt);
    if (name == "ripple") return ripple_report(base, opt);
    if (name == "determinism") return determinism_report(base, opt);
    if (name == "custom") return custom_report(base, opt);
    throw ConfigError("unknown scenario \"" + name + "\"");
}

Batch run_all(const Config& base, const RunOptions& opt) {
    std::vector<std::future<ScenarioReport>> futures;
    for (const auto& name : catalog()) {
        futures.push_back(std::async(std::launch::async, [&base, &opt, name] { return run_scenario(name, base, opt); }));
    }
    Batch b;
    for (auto& f : futures) b.reports.push_back(f.get());
    std::vector<const NamedRun*> runs;
    for (const auto& r : b.reports) {
        for (const auto& run : r.runs) runs.push_back(&run);
    }
    b.conservation = conservation_check(runs, base.system.p_rated);
    return b;
}

std::vector<Criterion> Batch::criteria() const {
    std::vector<Criterion> out;
    for (int id = 1; id <= 9; ++id) {
        if (id == 7) {
            out.push_back(conservation);
            continue;
        }
        for (const auto& r : reports) {
            for (const auto& c : r.criteria) {
                if (c.id == id) out.push_back(c);
            }
        }
    }
    return out;
}

bool Batch::pass() const {
    const auto cs = criteria();
    return std::all_of(cs.begin(), cs.end(), [](const Criterion& c) { return c.pass; });
}

void write_report(const ScenarioReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& file) {
        std::ofstream f(dir / file, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
        return f;
    };
    for (const auto& run : r.runs) {
        {
            auto f = open("trace_" + run.label + ".csv");
            sim::write_csv(run.result.trace, f);
        }
        if (!run.result.trace.gate_t.empty()) {
            auto f = open("gates_" + run.label + ".csv");
            sim::write_gates_csv(run.result.trace, f);
        }
    }
    for (const auto& p : r.plots) {
        auto f = open(p.name + ".csv");
        sim::write_csv(p.table, f);
    }
    auto f = open("summary.json");
    f << r.summary().dump(2) << '\n';
}

}  // namespace sstsim::scenarios
