#include "xtask/preprocess/windows.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/preprocess/spectral.hpp"

namespace xtask::preprocess {

double window_start(int k) { return kFirstWindowStart + kWindowStep * k; }

std::ptrdiff_t window_first_sample(std::size_t onset_sample, int k, double rate) {
    return static_cast<std::ptrdiff_t>(onset_sample) + static_cast<std::ptrdiff_t>(std::llround(window_start(k) * rate));
}

std::string_view to_string(WindowRole role) {
    switch (role) {
        case WindowRole::train_lrp: return "train-LRP";
        case WindowRole::train_no_lrp: return "train-NoLRP";
        case WindowRole::test: return "test";
        case WindowRole::ignored: return "ignored";
    }
    return "?";
}

namespace {

std::size_t window_length(double rate) {
    const auto n = std::llround(kWindowLength * rate);
    if (n <= 0) throw Error(ErrorKind::invalid_argument, fmt::format("invalid rate {}", rate));
    return static_cast<std::size_t>(n);
}

void check_history(std::size_t onset_sample, std::size_t samples, double rate) {
    const auto first = window_first_sample(onset_sample, 0, rate);
    if (first < 0) {
        throw Error(ErrorKind::preprocess, fmt::format("insufficient history: onset at sample {} needs {} s before it",
                                                       onset_sample, -kFirstWindowStart));
    }
    const auto last_end = window_first_sample(onset_sample, kWindowCount - 1, rate) +
                          static_cast<std::ptrdiff_t>(window_length(rate));
    if (last_end > static_cast<std::ptrdiff_t>(samples)) {
        throw Error(ErrorKind::preprocess,
                    fmt::format("recording of {} samples ends before onset sample {}", samples, onset_sample));
    }
}

}  // namespace

WindowRole window_role(int k) {
    if (k < 0 || k >= kWindowCount) return WindowRole::ignored;
    if (std::ranges::find(kLrpTrainingWindows, k) != kLrpTrainingWindows.end()) return WindowRole::train_lrp;
    if (std::ranges::find(kNoLrpTrainingWindows, k) != kNoLrpTrainingWindows.end()) return WindowRole::train_no_lrp;
    return WindowRole::test;
}

WindowSet extract_windows(const RawRecording& rec, std::size_t onset_sample, const Provenance& trial) {
    const double rate = rec.rate();
    check_history(onset_sample, rec.sample_count(), rate);
    const auto length = static_cast<Eigen::Index>(window_length(rate));
    WindowSet set;
    set.windows.reserve(kWindowCount);
    for (int k = 0; k < kWindowCount; ++k) {
        Window w;
        w.trial = trial;
        w.k = k;
        w.start_offset = window_start(k);
        w.end_offset = w.start_offset + kWindowLength;
        w.data = rec.data().middleCols(window_first_sample(onset_sample, k, rate), length);
        w.rate = rate;
        w.role = window_role(k);
        set.windows.push_back(std::move(w));
    }
    set.predicted.assign(set.windows.size(), std::nullopt);
    set.truth.assign(set.windows.size(), std::nullopt);
    return set;
}

SignalMatrix preprocess_window(const SignalMatrix& raw, double rate, std::span<const std::string> channel_names) {
    return fft_bandpass(decimate(standardize(raw, channel_names), rate, kTargetRate), kTargetRate, kBandLow, kBandHigh);
}

std::vector<SignalMatrix> preprocess_trial(const RawRecording& rec, std::size_t onset_sample,
                                           std::span<const std::size_t> channels) {
    const double rate = rec.rate();
    check_history(onset_sample, rec.sample_count(), rate);
    const auto n = static_cast<Eigen::Index>(window_length(rate));
    const double factor = rate / kTargetRate;
    if (std::abs(factor - std::round(factor)) > 1e-9 || n % std::llround(factor) != 0) {
        throw Error(ErrorKind::invalid_argument, fmt::format("rate {} Hz cannot be decimated to {} Hz", rate, kTargetRate));
    }
    const Eigen::Index m = kWindowSamples;

    // Bins surviving both the decimation (|j| < m/2) and the band-pass. With a
    // 1 s window, bin j sits at j Hz at either rate.
    std::vector<Eigen::Index> bins;
    for (Eigen::Index j = 1; j <= (m - 1) / 2; ++j) {
        const double f = static_cast<double>(j) / kWindowLength;
        if (f >= kBandLow && f <= kBandHigh) bins.push_back(j);
    }
    const auto nb = static_cast<Eigen::Index>(bins.size());

    // analysis: rows cos/sin per bin; synthesis: 20-point inverse of the same bins.
    Eigen::MatrixXd analysis(2 * nb, n);
    Eigen::MatrixXd synthesis(m, 2 * nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
        const auto j = bins[static_cast<std::size_t>(b)];
        for (Eigen::Index t = 0; t < n; ++t) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((j * t) % n) / static_cast<double>(n);
            analysis(b, t) = std::cos(phase);
            analysis(nb + b, t) = std::sin(phase);
        }
        for (Eigen::Index t = 0; t < m; ++t) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((j * t) % m) / static_cast<double>(m);
            synthesis(t, b) = std::cos(phase);
            synthesis(t, nb + b) = std::sin(phase);
        }
    }

    std::vector<std::size_t> rows(channels.begin(), channels.end());
    if (rows.empty()) {
        for (std::size_t c = 0; c < rec.channel_count(); ++c) rows.push_back(c);
    }
    const auto nc = static_cast<Eigen::Index>(rows.size());

    // Column (c * K + k) holds window k of channel c.
    Eigen::MatrixXd segments(n, nc * kWindowCount);
    for (Eigen::Index c = 0; c < nc; ++c) {
        const auto row = rec.data().row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(c)]));
        for (int k = 0; k < kWindowCount; ++k) {
            segments.col(c * kWindowCount + k) = row.segment(window_first_sample(onset_sample, k, rate), n).transpose();
        }
    }
    const Eigen::RowVectorXd mean = segments.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((segments.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt();

    const Eigen::MatrixXd reconstructed = synthesis * (analysis * segments);

    std::vector<SignalMatrix> out(kWindowCount, SignalMatrix(nc, m));
    for (Eigen::Index c = 0; c < nc; ++c) {
        for (int k = 0; k < kWindowCount; ++k) {
            const auto col = c * kWindowCount + k;
            if (!(sd(col) > 0.0)) {
                const auto idx = rows[static_cast<std::size_t>(c)];
                throw Error(ErrorKind::preprocess, fmt::format("flat channel {}: zero variance within window {}",
                                                               rec.channel_names()[idx], k));
            }
            // Conjugate bins double the real part; mean and DC drop out.
            out[static_cast<std::size_t>(k)].row(c) =
                reconstructed.col(col).transpose() * (2.0 / (static_cast<double>(n) * sd(col)));
        }
    }
    return out;
}

}  // namespace xtask::preprocess
