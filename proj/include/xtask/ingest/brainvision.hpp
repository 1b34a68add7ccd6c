#pragma once

#include <string>

#include "xtask/core/types.hpp"

namespace xtask::ingest {

enum class BinaryFormat { int16, float32 };

/// Reads a .vhdr/.vmrk/.eeg triplet (multiplexed binary). Samples are scaled
/// to microvolts with each channel's resolution and unit. Marker positions
/// are taken verbatim from the `Mk<n>=<type>,<description>,<position>,...`
/// entries; the marker code is the description, or the type when the
/// description is empty.
RawRecording read_brainvision(const std::string& header_path);

/// Writes a triplet next to `header_path` (same stem, .eeg/.vmrk). For
/// int16, values are stored as round(value / resolution).
void write_brainvision(const RawRecording& rec, const std::string& header_path,
                       BinaryFormat format = BinaryFormat::float32, double resolution = 0.1);

}  // namespace xtask::ingest
