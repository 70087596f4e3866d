#include "sstsim/discrete.hpp"

#include <cmath>

#include "sstsim/params.hpp"

namespace sstsim::discrete {

Complex unit_circle(double f_hz, double dt) { return std::polar(1.0, kTwoPi * f_hz * dt); }

TustinLowPass::TustinLowPass(double omega, double dt) : dt_(dt) {
    const double k = 2.0 / dt;
    b_ = omega / (k + omega);
    a_ = (k - omega) / (k + omega);
}

double TustinLowPass::step(double x) {
    y_ = b_ * (x + x_prev_) + a_ * y_;
    x_prev_ = x;
    return y_;
}

void TustinLowPass::preset(double value) {
    x_prev_ = value;
    y_ = value;
}

Complex TustinLowPass::response(double f_hz) const {
    const Complex z = unit_circle(f_hz, dt_);
    return b_ * (z + 1.0) / (z - a_);
}

MatchedLowPass::MatchedLowPass(double omega, double dt) : pole_(std::exp(-omega * dt)), dt_(dt) {}

double MatchedLowPass::step(double x) {
    y_ = pole_ * y_ + (1.0 - pole_) * x;
    return y_;
}

Complex MatchedLowPass::response(double f_hz) const {
    const Complex z = unit_circle(f_hz, dt_);
    return (1.0 - pole_) * z / (z - pole_);
}

Complex BiquadCoeffs::response(double f_hz, double dt) const {
    const Complex zi = 1.0 / unit_circle(f_hz, dt);
    return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
}

BiquadCoeffs prewarped_resonator(double omega_b, double omega_r, double dt) {
    // s -> k (z - 1)/(z + 1) with k chosen so omega_r maps exactly.
    const double k = omega_r / std::tan(omega_r * dt / 2.0);
    const double w2 = omega_r * omega_r;
    const double a0 = k * k + omega_b * k + w2;
    BiquadCoeffs c;
    c.b0 = omega_b * k / a0;
    c.b1 = 0.0;
    c.b2 = -omega_b * k / a0;
    c.a1 = (2.0 * w2 - 2.0 * k * k) / a0;
    c.a2 = (k * k - omega_b * k + w2) / a0;
    return c;
}

BiquadCoeffs prewarped_ideal_resonator(double omega_r, double dt) {
    const double k = omega_r / std::tan(omega_r * dt / 2.0);
    const double w2 = omega_r * omega_r;
    const double a0 = k * k + w2;
    BiquadCoeffs c;
    c.b0 = k / a0;
    c.b1 = 0.0;
    c.b2 = -k / a0;
    c.a1 = (2.0 * w2 - 2.0 * k * k) / a0;
    c.a2 = 1.0;
    return c;
}

double Biquad::peek(double x) const {
    return c_.b0 * x + c_.b1 * x1_ + c_.b2 * x2_ - c_.a1 * y1_ - c_.a2 * y2_;
}

void Biquad::commit(double x, double y) {
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
}

double Biquad::step(double x) {
    const double y = peek(x);
    commit(x, y);
    return y;
}

void Biquad::reset() { x1_ = x2_ = y1_ = y2_ = 0.0; }

DelayLine::DelayLine(std::size_t length, double fill) : buf_(length, fill) {}

double DelayLine::push(double x) {
    if (buf_.empty()) return x;
    const double out = buf_[head_];
    buf_[head_] = x;
    head_ = (head_ + 1) % buf_.size();
    return out;
}

void DelayLine::fill(double value) {
    for (auto& v : buf_) v = value;
}

}  // namespace sstsim::discrete
