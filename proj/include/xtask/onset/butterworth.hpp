#pragma once

#include <span>
#include <vector>

namespace xtask::onset {

/// Second-order section, a0 normalised to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth low-pass via the bilinear transform with prewarping.
/// Odd orders end with a first-order section (b2 = a2 = 0).
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz);

/// Causal cascade, zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Forward-backward application (zero phase, squared magnitude response).
/// Edges use odd reflection of 3 * (filter taps) samples and steady-state
/// initial conditions scaled to the first sample of each pass.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x);

/// |H(f)| of the cascade.
double magnitude_response(std::span<const Biquad> sections, double frequency_hz, double rate_hz);

}  // namespace xtask::onset
