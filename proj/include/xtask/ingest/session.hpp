#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xtask/core/config.hpp"
#include "xtask/core/types.hpp"
#include "xtask/ingest/motion.hpp"

namespace xtask::ingest {

/// Trigger codes recorded on the EEG marker channel. The acquisition setup
/// decides the actual values, so every code is configurable.
struct MarkerCodes {
    std::string motion_start = "S 99";
    std::string motion_stop = "S 98";  // empty: no stop trigger recorded
    std::string switch_release = "S 16";
    std::string switch_press = "S 32";
    std::string error_symbol = "S 64";

    /// Reads `codes.<field>` keys, keeping defaults for absent ones.
    static MarkerCodes from_config(const KeyValueConfig& config);
};

/// Raw bytes carried through the cache untouched (EMG recordings).
struct Attachment {
    std::string name;
    std::vector<std::uint8_t> bytes;

    bool operator==(const Attachment&) const = default;
};

/// One recording set of one task for one subject, with the motion stream
/// placed on the EEG clock: motion sample m is EEG sample motion_offset + m.
struct SessionData {
    std::string subject_id;
    Movement task = Movement::unilateral;
    int set_index = 0;
    RawRecording eeg;
    MotionTrace motion;
    std::size_t motion_offset = 0;
    TrialTable trials;
    std::vector<Attachment> attachments;

    bool covers_motion(std::size_t eeg_sample) const {
        return eeg_sample >= motion_offset && eeg_sample < motion_offset + motion.sample_count();
    }

    bool operator==(const SessionData&) const = default;
};

/// Aligns motion to the EEG clock through the start trigger. Both streams
/// must share the rate; alignment never resamples. When the stop trigger is
/// present, the triggered span must match the motion length within 2 samples.
SessionData synchronize(RawRecording eeg, MotionTrace motion, const MarkerCodes& codes);

/// Segments trials from switch release markers. A trial's rest runs from the
/// preceding switch press (or the motion start) to its release; it ends at the
/// next press or `max_trial_seconds` after release. Error symbols inside the
/// trial, missing motion coverage, and short rests invalidate it.
TrialTable build_trials(const SessionData& session, const MarkerCodes& codes, double min_rest = kMinimumRestSeconds,
                        double max_trial_seconds = 3.0);

/// Lossless cache round-trip through the container format.
void save_session(const SessionData& session, const std::string& path);
SessionData load_session(const std::string& path);

}  // namespace xtask::ingest
