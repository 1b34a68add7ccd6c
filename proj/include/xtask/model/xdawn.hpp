#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xtask/core/types.hpp"

namespace xtask::model {

/// Columns are spatial filters, strongest first.
struct SpatialFilterModel {
    Eigen::MatrixXd filters;  // channels x min(4, channels)
    std::vector<std::string> channels;

    bool operator==(const SpatialFilterModel&) const = default;
};

inline constexpr int kPseudoChannels = 4;

/// Filters maximising evoked power (LRP-class mean window) over total power
/// of all training windows. Each filter v has v' Sx v = 1 and its
/// largest-magnitude entry positive.
SpatialFilterModel fit_xdawn(std::span<const SignalMatrix> windows, std::span<const Label> labels,
                             std::vector<std::string> channels, int pseudo_channels = kPseudoChannels);

/// filters' * window. `channels`, when given, must equal the training order.
Eigen::MatrixXd apply_xdawn(const SpatialFilterModel& model, const SignalMatrix& window,
                            std::span<const std::string> channels = {});

}  // namespace xtask::model
