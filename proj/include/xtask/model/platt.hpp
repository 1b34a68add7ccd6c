#pragma once

#include <span>

#include "xtask/core/types.hpp"

namespace xtask::model {

/// probability(s) = 1 / (1 + exp(A s + B)).
struct PlattCalibrator {
    double a = 0.0;
    double b = 0.0;
    int iterations = 0;

    double probability(double score) const;
    bool operator==(const PlattCalibrator&) const = default;
};

/// Newton fit with smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
/// Stops at gradient max-norm <= 1e-8; more than 100 iterations is an error.
PlattCalibrator fit_platt(std::span<const double> scores, std::span<const Label> labels);

}  // namespace xtask::model
