#pragma once

#include <array>
#include <span>

#include "xtask/core/types.hpp"
#include "xtask/preprocess/windows.hpp"

namespace xtask::eval {

/// Windows 60..80 start at -2.00..-1.00 s: the only span where the change
/// point may fall. Earlier windows are always NoLRP, window 80 always LRP.
inline constexpr int kRangeFirst = 60;
inline constexpr int kRangeLast = 80;

using LabelVector = std::array<Label, preprocess::kWindowCount>;

struct RelabelOptions {
    /// Whether the prediction for window 80 may be part of the backward
    /// NoLRP triple. Its ground truth is LRP either way.
    bool scan_fixed_window = true;
};

/// Ground truth for one trial from its 81 predictions. Scanning backwards
/// from window 80, the first run of three NoLRP predictions inside the range
/// puts the change point right after its latest window; without such a run
/// the whole range is LRP.
LabelVector relabel(std::span<const Label> predicted, const RelabelOptions& options = {});

}  // namespace xtask::eval
