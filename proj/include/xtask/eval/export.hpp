#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtask/eval/study.hpp"

namespace xtask::eval {

/// Header: subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba.
/// train_sets are ';'-joined; doubles use the shortest round-trip form.
std::string results_csv(std::span<const SplitResult> results);
std::vector<SplitResult> parse_results_csv(std::string_view text, std::string_view source = "<csv>");

/// Per-cell aggregates, including the TPR/TNR imbalance flag.
std::string summary_csv(std::span<const CellSummary> cells);

/// Box plots of BA, TPR and TNR for one (condition, channel set) cell.
std::string cell_svg(const CellSummary& cell, std::span<const SplitResult> results);

/// File name of a cell's SVG: `<condition>_<channel_set>.svg`.
std::string cell_svg_name(char condition, std::string_view channel_set);

/// Writes results.csv and summary.csv, and the per-cell SVGs when `svg` is set.
void export_report(const StudyReport& report, const std::string& directory, bool svg = true);

}  // namespace xtask::eval
