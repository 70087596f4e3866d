#pragma once

#include <complex>
#include <cstddef>
#include <vector>

// Small discrete-time building blocks shared by the controllers.
namespace sstsim::discrete {

using Complex = std::complex<double>;

/// First-order low-pass omega / (s + omega), bilinear (Tustin).
class TustinLowPass {
public:
    TustinLowPass() = default;
    TustinLowPass(double omega, double dt);

    double step(double x);
    void preset(double value);
    double output() const { return y_; }
    Complex response(double f_hz) const;

private:
    double b_ = 0.0;  // input weight
    double a_ = 0.0;  // feedback weight
    double x_prev_ = 0.0;
    double y_ = 0.0;
    double dt_ = 0.0;
};

/// First-order low-pass with the pole mapped as z = exp(-omega dt). Used when
/// the pole lies above the sampler's Nyquist frequency.
class MatchedLowPass {
public:
    MatchedLowPass() = default;
    MatchedLowPass(double omega, double dt);

    double step(double x);
    void preset(double value) { y_ = value; }
    double output() const { return y_; }
    Complex response(double f_hz) const;

private:
    double pole_ = 0.0;
    double y_ = 0.0;
    double dt_ = 0.0;
};

/// Direct-form-I biquad, normalised a0 = 1.
struct BiquadCoeffs {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    Complex response(double f_hz, double dt) const;
};

/// Band-pass resonator omega_b s / (s^2 + omega_b s + omega_r^2) through the
/// bilinear transform prewarped at omega_r.
BiquadCoeffs prewarped_resonator(double omega_b, double omega_r, double dt);

/// Undamped resonator s / (s^2 + omega_r^2), prewarped at omega_r.
BiquadCoeffs prewarped_ideal_resonator(double omega_r, double dt);

class Biquad {
public:
    Biquad() = default;
    explicit Biquad(const BiquadCoeffs& c) : c_(c) {}

    /// Output for input x without committing state.
    double peek(double x) const;
    /// Commit x and its output y (as returned by peek).
    void commit(double x, double y);
    double step(double x);
    void reset();

    const BiquadCoeffs& coeffs() const { return c_; }
    double x1() const { return x1_; }
    double y1() const { return y1_; }

private:
    BiquadCoeffs c_;
    double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

/// Fixed-length transport delay. Length 0 passes input through.
class DelayLine {
public:
    DelayLine() = default;
    explicit DelayLine(std::size_t length, double fill = 0.0);

    double push(double x);
    void fill(double value);
    std::size_t length() const { return buf_.size(); }
    const std::vector<double>& contents() const { return buf_; }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
};

/// exp(j omega dt) for the frequency f_hz.
Complex unit_circle(double f_hz, double dt);

}  // namespace sstsim::discrete
