#include "xtask/onset/onset.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/onset/butterworth.hpp"

namespace xtask::onset {

OnsetConfig OnsetConfig::from_config(const KeyValueConfig& config) {
    OnsetConfig c;
    c.threshold_mm = config.get_double("onset.threshold_mm", c.threshold_mm);
    c.release_delay_s = config.get_double("onset.release_delay_s", c.release_delay_s);
    c.rest_seconds = config.get_double("onset.rest_seconds", c.rest_seconds);
    c.lowpass_hz = config.get_double("onset.lowpass_hz", c.lowpass_hz);
    c.lowpass_order = static_cast<int>(config.get_int("onset.lowpass_order", c.lowpass_order));
    c.zero_phase = config.get_or("onset.zero_phase", "true") == "true";
    c.left_hand = config.get_or("onset.left_hand", c.left_hand);
    c.right_hand = config.get_or("onset.right_hand", c.right_hand);
    return c;
}

ingest::PositionMatrix rezero(const ingest::PositionMatrix& trial, std::size_t rest_samples) {
    if (rest_samples == 0 || static_cast<std::size_t>(trial.rows()) < rest_samples) {
        throw Error(ErrorKind::onset, fmt::format("trial of {} samples is shorter than the {}-sample resting period",
                                                  trial.rows(), rest_samples));
    }
    const Eigen::RowVector3d rest = trial.topRows(static_cast<Eigen::Index>(rest_samples)).colwise().mean();
    ingest::PositionMatrix out = trial.rowwise() - rest;
    return out;
}

std::vector<double> movement_score(const ingest::PositionMatrix& rezeroed, double rate, const OnsetConfig& config) {
    const auto n = static_cast<std::size_t>(rezeroed.rows());
    std::vector<double> distance(n);
    for (std::size_t t = 0; t < n; ++t) distance[t] = rezeroed.row(static_cast<Eigen::Index>(t)).norm();

    std::vector<double> velocity(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) velocity[t] = distance[t] - distance[t - 1];
    const auto sections = butterworth_lowpass(config.lowpass_order, config.lowpass_hz, rate);
    velocity = config.zero_phase ? sosfiltfilt(sections, velocity) : sosfilt(sections, velocity);

    const double peak = n ? *std::max_element(velocity.begin(), velocity.end()) : 0.0;
    if (!(peak > 0.0)) {
        throw Error(ErrorKind::onset, "degenerate trial: the hand never moves away from rest");
    }
    std::vector<double> score(n);
    for (std::size_t t = 0; t < n; ++t) score[t] = distance[t] * (velocity[t] / peak);
    return score;
}

OnsetEstimate detect_onset(std::span<const double> score, std::size_t switch_release, double threshold,
                           std::size_t delay_samples) {
    if (!(threshold > 0.0)) throw Error(ErrorKind::invalid_argument, "onset threshold must be positive");
    if (switch_release >= score.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("switch release {} outside trial of {} samples", switch_release, score.size()));
    }
    if (delay_samples > switch_release) {
        throw Error(ErrorKind::onset, "release delay reaches before the trial start");
    }
    for (std::size_t i = switch_release - delay_samples + 1; i-- > 0;) {
        if (score[i] < threshold) {
            return {i, std::vector<double>(score.begin(), score.end()), threshold, switch_release};
        }
    }
    throw Error(ErrorKind::onset, fmt::format("no sample below {} mm before the switch release", threshold));
}

const std::string& reference_marker(Movement task, const OnsetConfig& config) {
    return task == Movement::bilateral ? config.left_hand : config.right_hand;
}

void label_onsets(ingest::SessionData& session, const OnsetConfig& config) {
    const double rate = session.motion.rate;
    const auto& marker_name = reference_marker(session.task, config);
    const auto marker = session.motion.marker_index(marker_name);
    if (!marker) {
        throw Error(ErrorKind::onset, fmt::format("motion trace has no '{}' marker", marker_name));
    }
    const auto rest_samples = static_cast<std::size_t>(std::lround(config.rest_seconds * rate));
    const auto delay_samples = static_cast<std::size_t>(std::lround(config.release_delay_s * rate));
    const auto& positions = session.motion.positions[*marker];

    for (auto& trial : session.trials) {
        trial.onset_sample.reset();
        if (!trial.valid) continue;
        const std::size_t begin = trial.rest_start_sample - session.motion_offset;
        const std::size_t end = trial.end_sample - session.motion_offset;
        if (session.motion.has_gap(*marker, begin, end)) {
            trial.valid = false;
            trial.reason = "motion-gap";
            continue;
        }
        try {
            const ingest::PositionMatrix segment =
                positions.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
            const auto score = movement_score(rezero(segment, rest_samples), rate, config);
            const auto estimate =
                detect_onset(score, trial.release_sample - trial.rest_start_sample, config.threshold_mm, delay_samples);
            trial.onset_sample = trial.rest_start_sample + estimate.onset_sample;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::onset) throw;
            trial.valid = false;
            trial.reason = fmt::format("no-onset: {}", e.what());
        }
    }
}

std::string trial_table_csv(const std::vector<const ingest::SessionData*>& sessions) {
    std::string out = "subject,set,trial,condition,onset_sample,valid,reason\n";
    for (const auto* s : sessions) {
        for (const auto& t : s->trials) {
            auto reason = t.reason;
            std::replace(reason.begin(), reason.end(), ',', ';');
            out += fmt::format("{},{},{},{},{},{},{}\n", s->subject_id, s->set_index, t.index, to_string(t.movement),
                               t.onset_sample ? fmt::format("{}", *t.onset_sample) : std::string(),
                               t.valid ? "true" : "false", reason);
        }
    }
    return out;
}

}  // namespace xtask::onset
