#include "sstsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sstsim::metrics {

double ripple_pp(const std::vector<double>& t, const std::vector<double>& x, double f_target, double window) {
    if (t.size() != x.size() || t.size() < 2) throw std::invalid_argument("ripple_pp: need matching t and x");
    if (window * f_target < 5.0 - 1e-9) throw std::invalid_argument("ripple window shorter than five periods");
    const double span = t.back() - t.front();
    if (window > span + 1e-12) throw std::invalid_argument("ripple window exceeds the trace");

    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    const double periods = std::floor(window * f_target + 1e-9);
    const auto n = static_cast<std::size_t>(std::llround(periods / f_target / dt));
    const std::size_t first = t.size() - n;

    double mean = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) mean += x[i];
    mean /= static_cast<double>(n);

    const double w = 2.0 * std::numbers::pi * f_target;
    std::complex<double> acc{};
    for (std::size_t i = first; i < t.size(); ++i) acc += (x[i] - mean) * std::polar(1.0, -w * t[i]);
    const double amplitude = 2.0 * std::abs(acc) / static_cast<double>(n);
    return 2.0 * amplitude;
}

double ripple_metric(const sim::Trace& tr, std::string_view column, double f_target, double window) {
    return ripple_pp(tr.col("t"), tr.col(column), f_target, window);
}

Balance balance_metric(const sim::Trace& tr, int n_blocks, double t0, double t1) {
    const auto& t = tr.col("t");
    Balance b;
    b.phases.resize(3);
    std::vector<const std::vector<double>*> vmv, pdab;
    for (int k = 0; k < 3 * n_blocks; ++k) {
        const std::string idx = (k < 10 ? "0" : "") + std::to_string(k);
        vmv.push_back(&tr.col("vmv_" + idx));
        pdab.push_back(&tr.col("pdab_" + idx));
    }
    for (std::size_t r = 0; r < t.size(); ++r) {
        if (t[r] < t0 || t[r] > t1) continue;
        double mean_lo = std::numeric_limits<double>::infinity();
        double mean_hi = -mean_lo;
        for (int ph = 0; ph < 3; ++ph) {
            double vlo = std::numeric_limits<double>::infinity(), vhi = -vlo;
            double plo = vlo, phi = vhi;
            double mean = 0.0;
            for (int blk = 0; blk < n_blocks; ++blk) {
                const auto k = static_cast<std::size_t>(ph * n_blocks + blk);
                const double v = (*vmv[k])[r];
                const double p = (*pdab[k])[r];
                vlo = std::min(vlo, v);
                vhi = std::max(vhi, v);
                plo = std::min(plo, p);
                phi = std::max(phi, p);
                mean += v;
            }
            mean /= n_blocks;
            mean_lo = std::min(mean_lo, mean);
            mean_hi = std::max(mean_hi, mean);
            auto& pb = b.phases[static_cast<std::size_t>(ph)];
            pb.vmv_spread = std::max(pb.vmv_spread, vhi - vlo);
            pb.pdab_spread = std::max(pb.pdab_spread, phi - plo);
        }
        b.max_cross_phase_vmv = std::max(b.max_cross_phase_vmv, mean_hi - mean_lo);
    }
    for (const auto& pb : b.phases) {
        b.max_vmv_spread = std::max(b.max_vmv_spread, pb.vmv_spread);
        b.max_pdab_spread = std::max(b.max_pdab_spread, pb.pdab_spread);
    }
    return b;
}

StepResponse step_response(const sim::Trace& tr, std::string_view column, double t_step, double t_end,
                           double target, double band) {
    const auto& t = tr.col("t");
    const auto& x = tr.col(column);
    StepResponse s;
    double last_outside = t_step;
    bool any = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_step || t[i] > t_end) continue;
        any = true;
        const double dev = std::abs(x[i] - target);
        s.max_deviation = std::max(s.max_deviation, dev);
        if (dev > band) last_outside = t[i];
    }
    s.settle_time = last_outside - t_step;
    s.settled = any && last_outside < t_end;
    return s;
}

double window_mean(const sim::Trace& tr, std::string_view column, double t0, double t1) {
    const auto& t = tr.col("t");
    const auto& x = tr.col(column);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t0 && t[i] <= t1) {
            sum += x[i];
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("window_mean: empty window");
    return sum / static_cast<double>(n);
}

}  // namespace sstsim::metrics
