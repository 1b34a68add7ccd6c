#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtask/core/types.hpp"

namespace xtask::preprocess {

inline constexpr int kWindowCount = 81;
inline constexpr double kFirstWindowStart = -5.0;  // s relative to onset
inline constexpr double kWindowStep = 0.05;        // s
inline constexpr double kWindowLength = 1.0;       // s
inline constexpr double kTargetRate = 20.0;        // Hz
inline constexpr int kWindowSamples = 20;          // after decimation
inline constexpr double kBandLow = 0.1;            // Hz
inline constexpr double kBandHigh = 4.0;           // Hz

/// Start of window k relative to onset, in seconds.
double window_start(int k);

/// First sample of window k for an onset sample at `rate`.
std::ptrdiff_t window_first_sample(std::size_t onset_sample, int k, double rate);

enum class WindowRole { train_lrp, train_no_lrp, test, ignored };

std::string_view to_string(WindowRole role);

/// Window indices used for training: [-1.10,-0.10] and [-1.00,0.00] s are LRP;
/// [-3.05,-2.05], [-3.25,-2.25] and [-3.50,-2.50] s are NoLRP.
inline constexpr std::array<int, 2> kLrpTrainingWindows{78, 80};
inline constexpr std::array<int, 3> kNoLrpTrainingWindows{39, 35, 30};

/// Training role of window k; every other window is only predicted.
WindowRole window_role(int k);

/// Where a window came from. Split-integrity checks read these tags.
struct Provenance {
    std::string subject;
    Movement movement = Movement::unilateral;
    int set_index = 0;
    std::size_t trial_index = 0;

    bool operator==(const Provenance&) const = default;
};

struct Window {
    Provenance trial;
    int k = 0;
    double start_offset = 0.0;
    double end_offset = 0.0;
    SignalMatrix data;
    double rate = 0.0;
    WindowRole role = WindowRole::ignored;
};

/// Windows ordered by (trial, start_offset) with per-window label slots.
struct WindowSet {
    std::vector<Window> windows;
    std::vector<std::optional<Label>> predicted;
    std::vector<std::optional<Label>> truth;
};

/// The 81 raw windows of one trial. Throws a preprocess error with reason
/// "insufficient history" when the recording does not cover [onset-5 s, onset].
WindowSet extract_windows(const RawRecording& rec, std::size_t onset_sample, const Provenance& trial = {});

/// standardize -> decimate to 20 Hz -> band-pass 0.1-4 Hz.
SignalMatrix preprocess_window(const SignalMatrix& raw, double rate, std::span<const std::string> channel_names = {});

/// All 81 preprocessed windows of one trial, computed in one pass over the
/// recording. Equal to extracting and running preprocess_window on each.
/// `channels` selects recording rows; empty means all.
std::vector<SignalMatrix> preprocess_trial(const RawRecording& rec, std::size_t onset_sample,
                                           std::span<const std::size_t> channels = {});

}  // namespace xtask::preprocess
