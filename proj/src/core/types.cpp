#include "xtask/core/types.hpp"

#include <array>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::registry: return "registry";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::parse: return "parse";
        case ErrorKind::format: return "format";
        case ErrorKind::io: return "io";
        case ErrorKind::sync: return "sync";
        case ErrorKind::onset: return "onset";
        case ErrorKind::preprocess: return "preprocess";
        case ErrorKind::fit: return "fit";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::metric: return "metric";
    }
    return "unknown";
}

ParseError::ParseError(std::string file, std::size_t line, const std::string& message, std::string reason)
    : Error(ErrorKind::parse,
            line > 0 ? fmt::format("{}:{}: {}", file, line, message) : fmt::format("{}: {}", file, message)),
      file_(std::move(file)),
      line_(line),
      reason_(std::move(reason)) {}

std::string_view to_string(Movement movement) {
    return movement == Movement::unilateral ? "unilateral" : "bilateral";
}

Movement parse_movement(std::string_view text) {
    if (text == "unilateral") return Movement::unilateral;
    if (text == "bilateral") return Movement::bilateral;
    throw Error(ErrorKind::invalid_argument, fmt::format("unknown movement condition '{}'", text));
}

std::string_view to_string(Label label) { return label == Label::lrp ? "LRP" : "NoLRP"; }

RawRecording::RawRecording(SignalMatrix data, double rate, std::vector<std::string> channel_names,
                           std::vector<Marker> markers)
    : data_(std::move(data)),
      rate_(rate),
      channel_names_(std::move(channel_names)),
      markers_(std::move(markers)) {
    if (!(rate_ > 0.0)) {
        throw Error(ErrorKind::invalid_argument, fmt::format("sampling rate must be positive, got {}", rate_));
    }
    if (static_cast<std::size_t>(data_.rows()) != channel_names_.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("data has {} rows but {} channel names", data_.rows(), channel_names_.size()));
    }
    for (const auto& m : markers_) {
        if (m.sample >= sample_count()) {
            throw Error(ErrorKind::invalid_argument,
                        fmt::format("marker '{}' at sample {} outside [0, {})", m.code, m.sample, sample_count()));
        }
    }
}

std::optional<std::size_t> RawRecording::channel_index(std::string_view name) const {
    for (std::size_t i = 0; i < channel_names_.size(); ++i) {
        if (channel_names_[i] == name) return i;
    }
    return std::nullopt;
}

bool RawRecording::operator==(const RawRecording& other) const {
    return rate_ == other.rate_ && channel_names_ == other.channel_names_ && markers_ == other.markers_ &&
           data_.rows() == other.data_.rows() && data_.cols() == other.data_.cols() && data_ == other.data_;
}

Trial validate_trial(Trial trial, double min_rest) {
    if (!trial.valid) return trial;
    if (trial.rest_duration < min_rest) {
        trial.valid = false;
        trial.reason = fmt::format("rest<{}s", min_rest);
    }
    return trial;
}

namespace {

constexpr std::array<StudyCondition, 3> kConditions{{
    {'A', Movement::unilateral, Movement::unilateral},
    {'B', Movement::bilateral, Movement::bilateral},
    {'C', Movement::bilateral, Movement::unilateral},
}};

}  // namespace

std::span<const StudyCondition> study_conditions() { return kConditions; }

const StudyCondition& study_condition(char id) {
    for (const auto& c : kConditions) {
        if (c.id == id) return c;
    }
    throw Error(ErrorKind::registry, fmt::format("unknown study condition '{}' (available: A, B, C)", id));
}

const StudyCondition& study_condition(std::string_view id) {
    if (id.size() != 1) {
        throw Error(ErrorKind::registry, fmt::format("unknown study condition '{}' (available: A, B, C)", id));
    }
    return study_condition(id.front());
}

}  // namespace xtask
