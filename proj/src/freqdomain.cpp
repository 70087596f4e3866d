#include "sstsim/freqdomain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sstsim/dab_controller.hpp"
#include "sstsim/plant.hpp"

namespace sstsim::freq {

namespace {

constexpr double kRadToDeg = 180.0 / kPi;

Complex jw(double f_hz) { return {0.0, kTwoPi * f_hz}; }

double operating_slope(const SpmParams& p, const GmvdcOptions& o) {
    return o.operating_phi ? plant::phase_shape_slope(*o.operating_phi, p.phase_law) : 1.0;
}

// Bisection on a bracketed sign change of h.
template <class H>
double refine(H&& h, double lo, double hi) {
    const bool lo_sign = h(lo) > 0.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = std::sqrt(lo * hi);
        ((h(mid) > 0.0) == lo_sign ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace

Complex plant_factor(double f_hz, const SpmParams& p, const DabGains& /*g*/, const GmvdcOptions& o) {
    const double k = p.n_turns * p.v_lv_nom / (kTwoPi * p.f_s1 * p.l_leak * p.c_mv);
    return k * operating_slope(p, o) / jw(f_hz);
}

Complex pir_continuous(double f_hz, const DabGains& g, bool resonant) {
    const Complex s = jw(f_hz);
    Complex f = 1.0 + 1.0 / (s * g.t_imv);
    if (resonant) {
        const double wr = 2.0 * g.omega_0;
        f += (1.0 / g.t_rmv) * g.omega_bmv * s / (s * s + g.omega_bmv * s + wr * wr);
    }
    return g.k_pmv * f;
}

Complex sensor_factor(double f_hz, const DabGains& g) {
    const Complex s = jw(f_hz);
    return g.omega_vs / (s + g.omega_vs) * std::exp(-s * g.t_vs);
}

Complex computation_delay(double f_hz, const DabGains& g) { return std::exp(-jw(f_hz) * g.t_s1); }

Complex gmvdc_eval(double f_hz, const SpmParams& p, const DabGains& g, const GmvdcOptions& o) {
    return plant_factor(f_hz, p, g, o) * pir_continuous(f_hz, g, o.resonant) * sensor_factor(f_hz, g) *
           computation_delay(f_hz, g);
}

double gmvdc_phase_deg(double f_hz, const SpmParams& /*p*/, const DabGains& g, const GmvdcOptions& o) {
    // Re F_PIR >= k_pmv > 0, so its principal argument is already continuous.
    const double w = kTwoPi * f_hz;
    const double pir = std::arg(pir_continuous(f_hz, g, o.resonant));
    const double filt = -std::atan(w / g.omega_vs);
    const double delay = -w * (g.t_vs + g.t_s1);
    return -90.0 + (pir + filt + delay) * kRadToDeg;
}

OpenLoop gmvdc_loop(const SpmParams& p, const DabGains& g, const GmvdcOptions& o) {
    return {[=](double f) { return gmvdc_eval(f, p, g, o); },
            [=](double f) { return gmvdc_phase_deg(f, p, g, o); }};
}

OpenLoop integrator_with_delay(double k, double delay) {
    return {[=](double f) { return k / jw(f) * std::exp(-jw(f) * delay); },
            [=](double f) { return -90.0 - kTwoPi * f * delay * kRadToDeg; }};
}

std::vector<double> log_grid(double f_lo, double f_hi, int per_decade) {
    const double decades = std::log10(f_hi / f_lo);
    const int n = static_cast<int>(std::ceil(decades * per_decade - 1e-9)) + 1;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = i == n - 1 ? f_hi : f_lo * std::pow(10.0, static_cast<double>(i) / per_decade);
    }
    return out;
}

FreqResponse sweep(const OpenLoop& loop, double f_lo, double f_hi, int per_decade) {
    FreqResponse r;
    r.freqs = log_grid(f_lo, f_hi, per_decade);
    r.values.reserve(r.freqs.size());
    r.phase_deg.reserve(r.freqs.size());
    for (double f : r.freqs) {
        r.values.push_back(loop.eval(f));
        r.phase_deg.push_back(loop.phase_deg(f));
    }
    return r;
}

Margins margins(const FreqResponse& resp, const OpenLoop& loop) {
    Margins m;
    const auto& f = resp.freqs;
    std::size_t xi = f.size();
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (std::abs(resp.values[i - 1]) > 1.0 && std::abs(resp.values[i]) <= 1.0) {
            xi = i;
            break;
        }
    }
    if (xi == f.size()) return m;

    const double fc = refine([&](double x) { return std::abs(loop.eval(x)) - 1.0; }, f[xi - 1], f[xi]);
    m.crossover_hz = fc;
    m.phase_margin_deg = 180.0 + loop.phase_deg(fc);

    for (std::size_t i = xi; i < f.size(); ++i) {
        if (resp.phase_deg[i - 1] > -180.0 && resp.phase_deg[i] <= -180.0) {
            const double lo = std::max(f[i - 1], fc);
            const double fp = refine([&](double x) { return loop.phase_deg(x) + 180.0; }, lo, f[i]);
            m.phase_crossover_hz = fp;
            m.gain_margin_db = -20.0 * std::log10(std::abs(loop.eval(fp)));
            break;
        }
    }
    return m;
}

FreqResponse analyse(const OpenLoop& loop, double f_lo, double f_hi, int per_decade) {
    FreqResponse r = sweep(loop, f_lo, f_hi, per_decade);
    const Margins m = margins(r, loop);
    r.crossover_hz = m.crossover_hz;
    r.phase_margin_deg = m.phase_margin_deg;
    r.gain_margin_db = m.gain_margin_db;
    r.phase_crossover_hz = m.phase_crossover_hz;
    if (!m.crossover_hz) r.annotations.emplace_back("no gain crossover in sweep range");
    if (m.crossover_hz && !m.gain_margin_db) r.annotations.emplace_back("no -180 deg crossing above crossover");
    return r;
}

TimescaleReport timescale_audit(double mvdc_crossover_hz, double lvdc_bw_hz, double omega_ref) {
    TimescaleReport r;
    r.crossover_hz = mvdc_crossover_hz;
    r.lvdc_bw_hz = lvdc_bw_hz;
    r.ratio = mvdc_crossover_hz / lvdc_bw_hz;
    r.ref_hz = omega_ref / kTwoPi;
    r.ref_target_hz = mvdc_crossover_hz / 5.0;
    if (r.ratio < 10.0) {
        std::ostringstream os;
        os << "MVDC crossover " << mvdc_crossover_hz << " Hz is only " << r.ratio << "x the LVDC bandwidth "
           << lvdc_bw_hz << " Hz (need >= 10x)";
        r.violations.push_back(os.str());
    }
    if (std::abs(r.ref_hz - r.ref_target_hz) > 0.05 * r.ref_target_hz) {
        std::ostringstream os;
        os << "reference filter corner " << r.ref_hz << " Hz not within 5% of crossover/5 = " << r.ref_target_hz
           << " Hz";
        r.violations.push_back(os.str());
    }
    r.pass = r.violations.empty();
    return r;
}

DiscreteMismatch pir_discretisation_error(const DabGains& g, double phase_limit, double f_max_hz, bool resonant,
                                          int per_decade) {
    const dab::DabController ctrl(g, phase_limit, resonant);
    DiscreteMismatch d;
    for (double f : log_grid(1.0, f_max_hz, per_decade)) {
        const Complex disc = ctrl.pir_response(f);
        const Complex cont = pir_continuous(f, g, resonant);
        const double ph = std::abs(std::arg(disc / cont)) * kRadToDeg;
        const double mag = std::abs(20.0 * std::log10(std::abs(disc) / std::abs(cont)));
        if (ph > d.max_phase_err_deg) {
            d.max_phase_err_deg = ph;
            d.worst_phase_hz = f;
        }
        if (mag > d.max_mag_err_db) {
            d.max_mag_err_db = mag;
            d.worst_mag_hz = f;
        }
    }
    return d;
}

}  // namespace sstsim::freq
