#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xtask/core/config.hpp"
#include "xtask/ingest/session.hpp"

namespace xtask::onset {

struct OnsetConfig {
    double threshold_mm = 0.6;
    /// Mechanical delay between movement start and the switch release. The
    /// backward search starts this long before the release.
    double release_delay_s = 0.0;
    double lowpass_hz = 4.0;
    int lowpass_order = 4;
    bool zero_phase = true;
    double rest_seconds = 1.0;
    std::string left_hand = "left_hand";
    std::string right_hand = "right_hand";

    static OnsetConfig from_config(const KeyValueConfig& config);
};

struct OnsetEstimate {
    std::size_t onset_sample = 0;           // index into score_trace
    std::vector<double> score_trace;        // mm
    double threshold = 0.0;                 // mm
    std::size_t switch_release_sample = 0;  // index into score_trace
};

/// Subtracts the per-axis mean of the first `rest_samples` samples.
ingest::PositionMatrix rezero(const ingest::PositionMatrix& trial, std::size_t rest_samples);

/// score[t] = d[t] * v[t] / max(v), where d is the distance to rest and v the
/// low-passed sample-to-sample change of d. Throws when v never rises above 0.
std::vector<double> movement_score(const ingest::PositionMatrix& rezeroed, double rate, const OnsetConfig& config = {});

/// Walks backwards from `switch_release - delay_samples`; the first sample
/// whose score is below `threshold` is the onset.
OnsetEstimate detect_onset(std::span<const double> score, std::size_t switch_release, double threshold,
                           std::size_t delay_samples = 0);

/// Motion marker providing the labels: left hand for bilateral trials, right
/// hand for unilateral ones.
const std::string& reference_marker(Movement task, const OnsetConfig& config);

/// Runs the onset estimate for every valid trial and writes onset samples
/// (EEG clock) into the trial table. Trials that cannot be labelled are
/// invalidated with a reason instead of aborting the session.
void label_onsets(ingest::SessionData& session, const OnsetConfig& config);

/// CSV with columns subject,set,trial,condition,onset_sample,valid,reason.
std::string trial_table_csv(const std::vector<const ingest::SessionData*>& sessions);

}  // namespace xtask::onset
