#include "xtask/onset/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::onset {

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
    if (order < 1) throw Error(ErrorKind::invalid_argument, "Butterworth order must be >= 1");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("cutoff {} Hz must lie in (0, {}) for rate {} Hz", cutoff_hz, rate_hz / 2.0, rate_hz));
    }
    const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
    const double k2 = k * k;
    std::vector<Biquad> sections;
    for (int i = 1; i <= order / 2; ++i) {
        // 1/Q of the i-th conjugate pole pair.
        const double q = 2.0 * std::sin((2.0 * i - 1.0) * std::numbers::pi / (2.0 * order));
        const double norm = 1.0 / (1.0 + q * k + k2);
        Biquad s;
        s.b0 = k2 * norm;
        s.b1 = 2.0 * s.b0;
        s.b2 = s.b0;
        s.a1 = 2.0 * (k2 - 1.0) * norm;
        s.a2 = (1.0 - q * k + k2) * norm;
        sections.push_back(s);
    }
    if (order % 2 == 1) {
        const double norm = 1.0 / (1.0 + k);
        Biquad s;
        s.b0 = k * norm;
        s.b1 = s.b0;
        s.a1 = (k - 1.0) * norm;
        sections.push_back(s);
    }
    return sections;
}

namespace {

struct State {
    double z1 = 0.0, z2 = 0.0;
};

// Transposed direct form II.
void run(std::span<const Biquad> sections, std::vector<State>& state, std::vector<double>& x) {
    for (std::size_t s = 0; s < sections.size(); ++s) {
        const auto& c = sections[s];
        auto& st = state[s];
        for (auto& v : x) {
            const double in = v;
            const double out = c.b0 * in + st.z1;
            st.z1 = c.b1 * in - c.a1 * out + st.z2;
            st.z2 = c.b2 * in - c.a2 * out;
            v = out;
        }
    }
}

// State each section settles to under a constant input `level`.
std::vector<State> steady_state(std::span<const Biquad> sections, double level) {
    std::vector<State> state(sections.size());
    double in = level;
    for (std::size_t s = 0; s < sections.size(); ++s) {
        const auto& c = sections[s];
        const double gain = (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
        const double out = gain * in;
        state[s].z2 = c.b2 * in - c.a2 * out;
        state[s].z1 = c.b1 * in - c.a1 * out + state[s].z2;
        in = out;
    }
    return state;
}

}  // namespace

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    std::vector<State> state(sections.size());
    run(sections, state, y);
    return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const bool first_order = std::any_of(sections.begin(), sections.end(),
                                         [](const Biquad& c) { return c.b2 == 0.0 && c.a2 == 0.0; });
    const std::size_t taps = 2 * sections.size() + 1 - (first_order ? 1 : 0);
    const std::size_t pad = std::min<std::size_t>(3 * taps, n - 1);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    auto state = steady_state(sections, ext.front());
    run(sections, state, ext);
    std::reverse(ext.begin(), ext.end());
    state = steady_state(sections, ext.front());
    run(sections, state, ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double magnitude_response(std::span<const Biquad> sections, double frequency_hz, double rate_hz) {
    const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * frequency_hz / rate_hz);
    std::complex<double> h = 1.0;
    for (const auto& c : sections) {
        h *= (c.b0 + c.b1 * z + c.b2 * z * z) / (1.0 + c.a1 * z + c.a2 * z * z);
    }
    return std::abs(h);
}

}  // namespace xtask::onset
