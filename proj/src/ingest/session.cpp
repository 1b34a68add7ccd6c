#include "xtask/ingest/session.hpp"

#include <algorithm>
#include <cstdlib>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xtask/error.hpp"

namespace xtask::ingest {

MarkerCodes MarkerCodes::from_config(const KeyValueConfig& config) {
    MarkerCodes codes;
    codes.motion_start = config.get_or("codes.motion_start", codes.motion_start);
    codes.motion_stop = config.get_or("codes.motion_stop", codes.motion_stop);
    codes.switch_release = config.get_or("codes.switch_release", codes.switch_release);
    codes.switch_press = config.get_or("codes.switch_press", codes.switch_press);
    codes.error_symbol = config.get_or("codes.error_symbol", codes.error_symbol);
    return codes;
}

namespace {

std::vector<std::size_t> positions_of(const std::vector<Marker>& markers, const std::string& code) {
    std::vector<std::size_t> out;
    for (const auto& m : markers) {
        if (m.code == code) out.push_back(m.sample);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

SessionData synchronize(RawRecording eeg, MotionTrace motion, const MarkerCodes& codes) {
    if (eeg.rate() != motion.rate) {
        throw Error(ErrorKind::sync, fmt::format("EEG rate {} Hz and motion rate {} Hz differ; resampling is not supported",
                                                 eeg.rate(), motion.rate));
    }
    const auto starts = positions_of(eeg.markers(), codes.motion_start);
    if (starts.empty()) {
        throw Error(ErrorKind::sync, fmt::format("motion start code '{}' not found in EEG markers", codes.motion_start));
    }
    if (starts.size() > 1) {
        throw Error(ErrorKind::sync, fmt::format("ambiguous motion start code '{}' at samples {}", codes.motion_start,
                                                 fmt::join(starts, ", ")));
    }
    const auto start = starts.front();
    if (!codes.motion_stop.empty()) {
        const auto stops = positions_of(eeg.markers(), codes.motion_stop);
        if (stops.size() > 1) {
            throw Error(ErrorKind::sync, fmt::format("ambiguous motion stop code '{}' at samples {}", codes.motion_stop,
                                                     fmt::join(stops, ", ")));
        }
        if (stops.size() == 1) {
            const auto span = static_cast<long long>(stops.front()) - static_cast<long long>(start);
            const auto length = static_cast<long long>(motion.sample_count());
            if (std::llabs(span - length) > 2) {
                throw Error(ErrorKind::sync,
                            fmt::format("triggered motion span {} samples differs from motion length {} by more than 2",
                                        span, length));
            }
        }
    }
    SessionData session;
    session.eeg = std::move(eeg);
    session.motion = std::move(motion);
    session.motion_offset = start;
    return session;
}

TrialTable build_trials(const SessionData& session, const MarkerCodes& codes, double min_rest, double max_trial_seconds) {
    const auto& markers = session.eeg.markers();
    const auto releases = positions_of(markers, codes.switch_release);
    const auto presses = positions_of(markers, codes.switch_press);
    const auto errors = positions_of(markers, codes.error_symbol);
    const double rate = session.eeg.rate();
    const auto max_len = static_cast<std::size_t>(max_trial_seconds * rate);
    const std::size_t motion_end = session.motion_offset + session.motion.sample_count();

    TrialTable trials;
    std::size_t previous_release = 0;
    bool have_previous = false;
    for (const auto release : releases) {
        Trial t;
        t.index = trials.size();
        t.movement = session.task;
        t.set_index = session.set_index;
        t.release_sample = release;

        // Rest starts at the latest press after the previous release.
        auto press_before = std::upper_bound(presses.begin(), presses.end(), release);
        std::optional<std::size_t> rest_start;
        if (press_before != presses.begin()) {
            const auto candidate = *std::prev(press_before);
            if (!have_previous || candidate > previous_release) rest_start = candidate;
        }
        if (!rest_start) {
            if (have_previous) {
                t.valid = false;
                t.reason = "no switch press before release";
                rest_start = previous_release;
            } else {
                rest_start = std::min(session.motion_offset, release);
            }
        }
        t.rest_start_sample = *rest_start;

        auto press_after = std::upper_bound(presses.begin(), presses.end(), release);
        std::size_t end = std::min(release + max_len, session.eeg.sample_count());
        if (press_after != presses.end()) end = std::min(end, *press_after);
        t.end_sample = end;
        t.rest_duration = static_cast<double>(release - t.rest_start_sample) / rate;

        const bool error_inside = std::any_of(errors.begin(), errors.end(),
                                              [&](std::size_t e) { return e >= t.rest_start_sample && e < end; });
        if (t.valid && error_inside) {
            t.valid = false;
            t.reason = "error-symbol";
        }
        if (t.valid && (t.rest_start_sample < session.motion_offset || end > motion_end)) {
            t.valid = false;
            t.reason = "no-motion";
        }
        trials.push_back(validate_trial(std::move(t), min_rest));
        previous_release = release;
        have_previous = true;
    }
    return trials;
}

}  // namespace xtask::ingest
