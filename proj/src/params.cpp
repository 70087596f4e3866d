#include "sstsim/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace sstsim {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << name << " must be > 0 (got " << value << ")";
        throw ConfigError(os.str());
    }
}

bool within_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = n == 1 ? 1.0 : lo + (hi - lo) * k / (n - 1);
    }
    return out;
}

}  // namespace

const char* to_string(PhaseLaw law) { return law == PhaseLaw::PerUnit ? "per_unit" : "radian"; }

PhaseLaw phase_law_from_string(const std::string& s) {
    if (s == "per_unit") return PhaseLaw::PerUnit;
    if (s == "radian") return PhaseLaw::Radian;
    throw ConfigError("phase_law must be \"per_unit\" or \"radian\" (got \"" + s + "\")");
}

double SpmParams::phase_limit() const { return phase_law == PhaseLaw::PerUnit ? 0.5 : kPi / 2.0; }

double SystemParams::v_phase_rms() const { return v_grid_ll / std::sqrt(3.0); }

double SystemParams::v_phase_peak() const { return std::sqrt(2.0) * v_phase_rms(); }

DabGains DabGains::defaults_for(const SpmParams& spm) {
    DabGains g;
    g.k_v = spm.v_mv_nom / spm.v_lv_nom;
    g.t_s1 = 1.0 / spm.f_s1;
    return g;
}

ToleranceSpec ToleranceSpec::nominal(int n_modules) {
    const auto n = static_cast<std::size_t>(std::max(n_modules, 0));
    return {std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)};
}

ToleranceSpec ToleranceSpec::ladder(int n_modules, std::optional<std::uint64_t> seed) {
    const auto steps = linspace(0.91, 1.08, n_modules);
    const auto n = static_cast<std::size_t>(n_modules);
    ToleranceSpec t{std::vector<double>(n), std::vector<double>(n)};
    if (seed) {
        t.l_multipliers = steps;
        t.c_mv_multipliers = steps;
        std::mt19937_64 rng(*seed);
        std::shuffle(t.l_multipliers.begin(), t.l_multipliers.end(), rng);
        std::shuffle(t.c_mv_multipliers.begin(), t.c_mv_multipliers.end(), rng);
        return t;
    }
    // Module k = phase * n_blocks + block takes ladder rung block * 3 + phase.
    const std::size_t n_blocks = n / 3 > 0 ? n / 3 : 1;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t rung = n % 3 == 0 ? (k % n_blocks) * 3 + k / n_blocks : k;
        t.l_multipliers[k] = steps[rung];
        t.c_mv_multipliers[k] = steps[(rung + n / 2) % n];
    }
    return t;
}

bool ToleranceSpec::is_nominal() const {
    auto one = [](double x) { return x == 1.0; };
    return std::all_of(l_multipliers.begin(), l_multipliers.end(), one) &&
           std::all_of(c_mv_multipliers.begin(), c_mv_multipliers.end(), one);
}

double blocking_resonance(const SpmParams& p) {
    const double n2 = p.n_turns * p.n_turns;
    return std::sqrt((n2 * p.c_b1 + p.c_b2) / (p.l_leak * p.c_b1 * p.c_b2)) / kTwoPi;
}

SpmParams apply_tolerances(const SpmParams& p, const ToleranceSpec& t, std::size_t module_index) {
    if (module_index >= t.l_multipliers.size() || module_index >= t.c_mv_multipliers.size()) {
        std::ostringstream os;
        os << "module index " << module_index << " out of range (tolerance spec has "
           << std::min(t.l_multipliers.size(), t.c_mv_multipliers.size()) << " modules)";
        throw std::out_of_range(os.str());
    }
    SpmParams out = p;
    out.l_leak *= t.l_multipliers[module_index];
    out.c_mv *= t.c_mv_multipliers[module_index];
    return out;
}

void validate(const SpmParams& p) {
    require_positive(p.v_mv_nom, "spm.v_mv_nom");
    require_positive(p.v_ac_nom, "spm.v_ac_nom");
    require_positive(p.v_lv_nom, "spm.v_lv_nom");
    require_positive(p.p_rated, "spm.p_rated");
    require_positive(p.q_rated, "spm.q_rated");
    require_positive(p.f_s1, "spm.f_s1");
    require_positive(p.f_s2, "spm.f_s2");
    require_positive(p.c_mv, "spm.c_mv");
    require_positive(p.l_leak, "spm.l_leak");
    require_positive(p.n_turns, "spm.n_turns");
    require_positive(p.c_b1, "spm.c_b1");
    require_positive(p.c_b2, "spm.c_b2");

    const double fr = blocking_resonance(p);
    if (!(fr > p.f_s1 / 10.0 && fr < p.f_s1 / 2.0)) {
        std::ostringstream os;
        os << "blocking resonance " << fr << " Hz outside (f_s1/10, f_s1/2) = (" << p.f_s1 / 10.0
           << ", " << p.f_s1 / 2.0 << ") Hz";
        throw ConfigError(os.str());
    }
}

void validate(const SystemParams& sys) {
    if (sys.n_blocks < 1) throw ConfigError("n_blocks must be ≥ 1");
    require_positive(sys.s_rated, "system.s_rated");
    require_positive(sys.p_rated, "system.p_rated");
    require_positive(sys.q_rated, "system.q_rated");
    require_positive(sys.v_grid_ll, "system.v_grid_ll");
    require_positive(sys.omega_0, "system.omega_0");
    require_positive(sys.v_lv_ref, "system.v_lv_ref");
    require_positive(sys.f_c, "system.f_c");
    require_positive(sys.l_filter, "system.l_filter");
    require_positive(sys.c_lv, "system.c_lv");
    require_positive(sys.lvdc_bw_hz, "system.lvdc_bw_hz");
    require_positive(sys.pll_bw_hz, "system.pll_bw_hz");
    require_positive(sys.cc_bw_hz, "system.cc_bw_hz");
    require_positive(sys.precharge_i_limit, "system.precharge_i_limit");
    require_positive(sys.precharge_v_target, "system.precharge_v_target");
    require_positive(sys.precharge_r, "system.precharge_r");
}

void validate(const DabGains& g) {
    require_positive(g.k_v, "dab_gains.k_v");
    require_positive(g.omega_ref, "dab_gains.omega_ref");
    require_positive(g.k_pmv, "dab_gains.k_pmv");
    require_positive(g.t_imv, "dab_gains.t_imv");
    require_positive(g.t_rmv, "dab_gains.t_rmv");
    require_positive(g.omega_bmv, "dab_gains.omega_bmv");
    require_positive(g.omega_vs, "dab_gains.omega_vs");
    require_positive(g.t_vs, "dab_gains.t_vs");
    require_positive(g.t_s1, "dab_gains.t_s1");
    require_positive(g.omega_0, "dab_gains.omega_0");
}

void validate(const ToleranceSpec& t, int n_modules) {
    const auto n = static_cast<std::size_t>(n_modules);
    if (t.l_multipliers.size() != n || t.c_mv_multipliers.size() != n) {
        std::ostringstream os;
        os << "tolerances need " << n << " multipliers each (got l=" << t.l_multipliers.size()
           << ", c_mv=" << t.c_mv_multipliers.size() << ")";
        throw ConfigError(os.str());
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!(t.l_multipliers[k] > 0.0) || !(t.c_mv_multipliers[k] > 0.0)) {
            std::ostringstream os;
            os << "tolerance multipliers must be > 0 (module " << k << ")";
            throw ConfigError(os.str());
        }
    }
}

void validate_consistency(const SystemParams& sys, const SpmParams& spm) {
    const double v_module = sys.v_grid_ll / (std::sqrt(3.0) * sys.n_blocks);
    if (!within_rel(v_module, spm.v_ac_nom, 0.01)) {
        std::ostringstream os;
        os << "per-module AC voltage v_grid_ll/(sqrt(3)*n_blocks) = " << v_module
           << " V differs from spm.v_ac_nom = " << spm.v_ac_nom << " V by more than 1%";
        throw ConfigError(os.str());
    }
    const double p_module = sys.p_rated / sys.n_modules();
    if (!within_rel(p_module, spm.p_rated, 0.01)) {
        std::ostringstream os;
        os << "per-module power p_rated/(3*n_blocks) = " << p_module
           << " W differs from spm.p_rated = " << spm.p_rated << " W by more than 1%";
        throw ConfigError(os.str());
    }
}

}  // namespace sstsim
