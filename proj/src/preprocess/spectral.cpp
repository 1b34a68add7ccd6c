#include "xtask/preprocess/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::preprocess {

namespace {

using cd = std::complex<double>;

// Bin j of an n-point DFT of `x`.
cd dft_bin(const double* x, Eigen::Index n, Eigen::Index j) {
    const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
    double re = 0.0, im = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        // Reduce the phase index mod n to keep the argument small.
        const double phase = step * static_cast<double>((j * t) % n);
        re += x[t] * std::cos(phase);
        im += x[t] * std::sin(phase);
    }
    return {re, im};
}

// Signed frequency index of bin j in an n-point DFT.
Eigen::Index signed_bin(Eigen::Index j, Eigen::Index n) { return j <= n / 2 ? j : j - n; }

}  // namespace

SignalMatrix standardize(const SignalMatrix& window, std::span<const std::string> channel_names) {
    SignalMatrix out(window.rows(), window.cols());
    const auto n = static_cast<double>(window.cols());
    for (Eigen::Index c = 0; c < window.rows(); ++c) {
        const double mean = window.row(c).sum() / n;
        const auto centred = (window.row(c).array() - mean).eval();
        const double sd = std::sqrt(centred.square().sum() / n);
        if (!(sd > 0.0)) {
            const auto name = static_cast<std::size_t>(c) < channel_names.size()
                                  ? channel_names[static_cast<std::size_t>(c)]
                                  : fmt::format("#{}", c);
            throw Error(ErrorKind::preprocess, fmt::format("flat channel {}: zero variance within the window", name));
        }
        out.row(c) = centred / sd;
    }
    return out;
}

SignalMatrix decimate(const SignalMatrix& window, double rate, double target_rate) {
    if (!(rate > 0.0) || !(target_rate > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "rates must be positive");
    }
    const double factor = rate / target_rate;
    if (std::abs(factor - std::round(factor)) > 1e-9 || factor < 1.0) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("rate {} Hz is not an integer multiple of {} Hz", rate, target_rate));
    }
    const auto q = static_cast<Eigen::Index>(std::llround(factor));
    const Eigen::Index n = window.cols();
    if (n % q != 0) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("window of {} samples is not divisible by the factor {}", n, q));
    }
    const Eigen::Index m = n / q;
    // Keep |bin| < m/2: strictly below the new Nyquist.
    const Eigen::Index kept = (m - 1) / 2;

    SignalMatrix out = SignalMatrix::Zero(window.rows(), m);
    for (Eigen::Index c = 0; c < window.rows(); ++c) {
        const double* x = window.row(c).data();
        const double dc = dft_bin(x, n, 0).real();
        std::vector<cd> bins(static_cast<std::size_t>(kept) + 1);
        for (Eigen::Index j = 1; j <= kept; ++j) bins[static_cast<std::size_t>(j)] = dft_bin(x, n, j);
        for (Eigen::Index t = 0; t < m; ++t) {
            double acc = dc;
            for (Eigen::Index j = 1; j <= kept; ++j) {
                const double phase = 2.0 * std::numbers::pi * static_cast<double>((j * t) % m) / static_cast<double>(m);
                acc += 2.0 * (bins[static_cast<std::size_t>(j)] * std::polar(1.0, phase)).real();
            }
            out(c, t) = acc / static_cast<double>(n);
        }
    }
    return out;
}

SignalMatrix fft_bandpass(const SignalMatrix& window, double rate, double low_hz, double high_hz) {
    if (!(rate > 0.0) || low_hz > high_hz) throw Error(ErrorKind::invalid_argument, "invalid band");
    const Eigen::Index n = window.cols();
    if (n == 0) throw Error(ErrorKind::invalid_argument, "empty window");
    const double resolution = rate / static_cast<double>(n);

    std::vector<Eigen::Index> passband;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double f = std::abs(static_cast<double>(signed_bin(j, n))) * resolution;
        if (f >= low_hz && f <= high_hz) passband.push_back(j);
    }
    SignalMatrix out = SignalMatrix::Zero(window.rows(), n);
    for (Eigen::Index c = 0; c < window.rows(); ++c) {
        const double* x = window.row(c).data();
        for (const auto j : passband) {
            const cd bin = dft_bin(x, n, j);
            for (Eigen::Index t = 0; t < n; ++t) {
                const double phase = 2.0 * std::numbers::pi * static_cast<double>((j * t) % n) / static_cast<double>(n);
                out(c, t) += (bin * std::polar(1.0, phase)).real();
            }
        }
        out.row(c) /= static_cast<double>(n);
    }
    return out;
}

}  // namespace xtask::preprocess
