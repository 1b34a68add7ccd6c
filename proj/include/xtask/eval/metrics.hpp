#pragma once

#include <cstddef>
#include <span>

#include "xtask/core/types.hpp"

namespace xtask::eval {

/// LRP is the positive class.
struct Confusion {
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;

    Confusion& operator+=(const Confusion& o);
    bool operator==(const Confusion&) const = default;
};

struct Rates {
    double tpr = 0.0;
    double tnr = 0.0;
    double ba = 0.0;
    Confusion confusion;
};

Confusion confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// Throws a metric error when the ground truth lacks a class.
Rates rates(const Confusion& c);
Rates balanced_accuracy(std::span<const Label> predicted, std::span<const Label> truth);

}  // namespace xtask::eval
