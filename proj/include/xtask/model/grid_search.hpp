#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "xtask/core/types.hpp"
#include "xtask/model/svm.hpp"

namespace xtask::model {

inline constexpr int kGridSize = 7;
inline constexpr int kDefaultFolds = 5;

/// 10^-6, 10^-5, ..., 10^0.
std::array<double, kGridSize> c_grid();

/// Preprocessed training windows. `groups` ties windows of the same trial
/// together so cross-validation never splits a trial; empty means one group
/// per window.
struct TrainingSet {
    std::vector<SignalMatrix> windows;
    std::vector<Label> labels;
    std::vector<std::size_t> groups;
};

struct GridSearchOptions {
    SvmOptions svm;
    std::uint64_t seed = 0;
    int folds = kDefaultFolds;
};

struct GridSearchResult {
    double best_c = 0.0;
    std::array<double, kGridSize> cv_balanced_accuracy{};
    int folds = 0;
    std::vector<std::string> warnings;
};

/// Fold index per window. Whole groups go to one fold; folds are filled
/// round-robin per class after a seeded shuffle.
std::vector<int> assign_folds(const TrainingSet& data, int folds, std::uint64_t seed);

/// Stratified k-fold CV over the C grid. Each fold refits xDAWN, the
/// normaliser and the SVM on its training part and scores held-out windows by
/// the sign of the decision value; the pooled balanced accuracy ranks C.
/// Ties go to the smaller C.
GridSearchResult grid_search(const TrainingSet& data, const std::vector<std::string>& channels,
                             const GridSearchOptions& options = {});

}  // namespace xtask::model
