#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xtask/core/channels.hpp"
#include "xtask/core/config.hpp"
#include "xtask/core/types.hpp"
#include "xtask/ingest/session.hpp"

namespace xtask::synth {

struct SynthConfig {
    std::uint64_t seed = 0;
    std::string subject_id = "sub01";
    int trials_per_set = 40;
    int sets = 3;
    Movement movement = Movement::unilateral;
    double rate = 500.0;

    /// |lrp_peak| / noise SD.
    double snr = 1.0;
    double lrp_onset_lead = 1.2;  // s before onset where the ramp starts
    double lrp_peak = -5.0;       // uV at onset
    double lrp_return = 0.5;      // s back to baseline after onset

    /// Share of noise variance that is white; the rest is 1/f-shaped.
    double white_fraction = 0.85;
    std::vector<double> pink_corners_hz{0.1, 0.4, 1.6, 6.4, 25.6};
    /// Gaussian kernel length in 10 % scalp steps; the default gives
    /// correlation 0.5 between neighbouring electrodes.
    double spatial_length = 0.8493218002880191;
    /// Gaussian width of the planted topography, same units.
    double topography_width = 0.5;
    ScalpPosition focus{-1.5, 0.0};

    double rest_min = 5.5;
    double rest_max = 8.0;
    double release_delay = 0.02;  // s from onset to switch release
    double reach_mm = 300.0;
    double reach_s = 0.6;
    double hold_s = 0.4;
    double return_s = 0.6;
    double press_after_return_s = 0.1;
    double jitter_mm = 0.05;  // uniform +/- per axis
    double lead_in_s = 0.5;   // EEG before the motion start trigger
    double tail_s = 1.0;      // after the last press

    ingest::MarkerCodes codes;

    void validate() const;
    static SynthConfig from_config(const KeyValueConfig& config);
};

struct GroundTruthRecord {
    std::vector<std::size_t> onset_samples;      // EEG clock
    std::vector<std::size_t> lrp_start_samples;  // EEG clock
    std::vector<std::size_t> release_samples;    // EEG clock
    std::vector<std::string> channels;
    std::vector<double> topography;              // per channel, peak 1

    bool operator==(const GroundTruthRecord&) const = default;
};

struct SynthSession {
    ingest::SessionData session;
    GroundTruthRecord truth;
};

/// x(t) = distance (10 tau^3 - 15 tau^4 + 6 tau^5), tau = t / duration,
/// clamped outside [0, duration].
double minimum_jerk(double distance, double duration, double t);

/// Samples of the reach at `rate`, from t = 0 through t = duration.
std::vector<double> minimum_jerk_trace(double distance, double duration, double rate);

/// Planted LRP weights over the cap vocabulary. Unilateral: Gaussian around
/// the left focus, right hemisphere exactly 0. Bilateral: left focus plus its
/// mirror image.
std::vector<double> topography(Movement movement, const SynthConfig& config);

/// Background EEG: channels x samples, unit variance per channel before
/// scaling by `sd`.
SignalMatrix background_noise(const SynthConfig& config, std::size_t samples, double sd, std::uint64_t stream);

/// One recording set, synchronised and segmented into trials (onsets not yet
/// labelled). Deterministic in (seed, subject_id, movement, set_index).
SynthSession generate_session(const SynthConfig& config, int set_index);

}  // namespace xtask::synth
