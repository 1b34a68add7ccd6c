#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace xtask {

/// Channels × samples, one contiguous row per channel.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Movement { unilateral, bilateral };

std::string_view to_string(Movement movement);
Movement parse_movement(std::string_view text);

/// LRP is the positive class.
enum class Label { no_lrp, lrp };

std::string_view to_string(Label label);

struct Marker {
    std::size_t sample = 0;
    std::string code;

    bool operator==(const Marker&) const = default;
};

/// Multichannel EEG in microvolts with its channel names and event markers.
/// Invariants are checked on construction; the object is immutable afterwards.
class RawRecording {
public:
    RawRecording() = default;
    RawRecording(SignalMatrix data, double rate, std::vector<std::string> channel_names,
                 std::vector<Marker> markers);

    const SignalMatrix& data() const noexcept { return data_; }
    double rate() const noexcept { return rate_; }
    const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }
    const std::vector<Marker>& markers() const noexcept { return markers_; }

    std::size_t channel_count() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t sample_count() const noexcept { return static_cast<std::size_t>(data_.cols()); }

    std::optional<std::size_t> channel_index(std::string_view name) const;

    bool operator==(const RawRecording& other) const;

private:
    SignalMatrix data_;
    double rate_ = 0.0;
    std::vector<std::string> channel_names_;
    std::vector<Marker> markers_;
};

/// One self-paced reach: rest on the hand switch, release, reach, return.
/// Sample indices are on the EEG clock.
struct Trial {
    std::size_t index = 0;
    std::size_t rest_start_sample = 0;
    std::size_t release_sample = 0;
    std::size_t end_sample = 0;
    std::optional<std::size_t> onset_sample;
    Movement movement = Movement::unilateral;
    int set_index = 0;
    bool valid = true;
    double rest_duration = 0.0;
    std::string reason;

    bool operator==(const Trial&) const = default;
};

using TrialTable = std::vector<Trial>;

inline constexpr double kMinimumRestSeconds = 5.0;

/// Sets `valid` from the resting period (boundary inclusive). A trial that is
/// already invalid stays invalid with its original reason.
Trial validate_trial(Trial trial, double min_rest = kMinimumRestSeconds);

/// Train/test pairing of movement tasks.
struct StudyCondition {
    char id = 'A';
    Movement train = Movement::unilateral;
    Movement test = Movement::unilateral;

    bool operator==(const StudyCondition&) const = default;
};

/// The closed table A/B/C.
std::span<const StudyCondition> study_conditions();
const StudyCondition& study_condition(char id);
const StudyCondition& study_condition(std::string_view id);

}  // namespace xtask
