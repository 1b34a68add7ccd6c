#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace xtask::ingest {

/// Samples × 3 (x, y, z) in millimetres.
using PositionMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// A dropout longer than the interpolation limit. The samples are filled
/// linearly so the trace stays NaN-free, but trials touching the span are
/// rejected downstream.
struct GapSpan {
    std::size_t marker = 0;
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    bool operator==(const GapSpan&) const = default;
};

struct MotionTrace {
    std::vector<std::string> marker_names;
    std::vector<PositionMatrix> positions;  // one per marker, equal lengths
    double rate = 0.0;
    std::vector<GapSpan> flagged_gaps;

    std::size_t sample_count() const { return positions.empty() ? 0 : static_cast<std::size_t>(positions.front().rows()); }
    std::optional<std::size_t> marker_index(const std::string& name) const;
    /// True when [begin, end) overlaps a flagged gap of `marker`.
    bool has_gap(std::size_t marker, std::size_t begin, std::size_t end) const;

    bool operator==(const MotionTrace& other) const;
};

inline constexpr std::size_t kMaxInterpolatedGap = 10;

/// Reads the one-row-per-sample export with `<marker>_x,_y,_z` columns.
/// Empty or `NaN` cells are dropouts. The rate comes from `rate_override`,
/// a `# rate = <Hz>` comment, or a `<file>.cfg` sidecar with `rate = <Hz>`,
/// in that order.
MotionTrace read_motion_csv(const std::string& path, std::optional<double> rate_override = std::nullopt);
MotionTrace parse_motion_csv(const std::string& text, const std::string& source,
                             std::optional<double> rate_override = std::nullopt);

void write_motion_csv(const MotionTrace& trace, const std::string& path);

/// Fills NaN runs in place: runs up to `kMaxInterpolatedGap` silently, longer
/// ones flagged. Leading/trailing runs are held at the nearest valid sample.
std::vector<GapSpan> fill_gaps(std::vector<PositionMatrix>& positions);

}  // namespace xtask::ingest
