#include "xtask/model/grid_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/model/features.hpp"

namespace xtask::model {

std::array<double, kGridSize> c_grid() {
    std::array<double, kGridSize> grid{};
    for (int i = 0; i < kGridSize; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, i - 6);
    return grid;
}

std::vector<int> assign_folds(const TrainingSet& data, int folds, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> fold(data.labels.size(), 0);
    if (!data.groups.empty()) {
        if (data.groups.size() != data.labels.size()) {
            throw Error(ErrorKind::invalid_argument, "groups and labels differ in length");
        }
        std::vector<std::size_t> unique = data.groups;
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        std::shuffle(unique.begin(), unique.end(), rng);
        std::map<std::size_t, int> of_group;
        for (std::size_t i = 0; i < unique.size(); ++i) of_group[unique[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
        for (std::size_t i = 0; i < fold.size(); ++i) fold[i] = of_group.at(data.groups[i]);
        return fold;
    }
    for (const auto cls : {Label::no_lrp, Label::lrp}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            if (data.labels[i] == cls) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i = 0; i < members.size(); ++i) fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
    return fold;
}

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (const auto i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

GridSearchResult grid_search(const TrainingSet& data, const std::vector<std::string>& channels,
                             const GridSearchOptions& options) {
    const auto grid = c_grid();
    GridSearchResult result;
    const auto pos = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), Label::lrp));
    const auto neg = data.labels.size() - pos;
    std::size_t groups = data.labels.size();
    if (!data.groups.empty()) {
        auto g = data.groups;
        std::sort(g.begin(), g.end());
        groups = static_cast<std::size_t>(std::unique(g.begin(), g.end()) - g.begin());
    }
    const std::size_t limit = std::min({pos, neg, groups});
    int folds = options.folds;
    if (limit < static_cast<std::size_t>(folds)) {
        folds = static_cast<int>(limit);
        result.warnings.push_back(
            fmt::format("only {} instances in the smaller class: cross-validation uses {} folds", limit, folds));
    }
    result.folds = folds;
    if (folds < 2) {
        result.warnings.push_back("too few instances for cross-validation: smallest C selected");
        result.best_c = grid.front();
        return result;
    }

    const auto fold_of = assign_folds(data, folds, options.seed);
    // Held-out decision values per C, pooled across folds.
    std::vector<std::vector<double>> scores(grid.size(), std::vector<double>(data.labels.size(), 0.0));
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
        const auto train_windows = pick(data.windows, train);
        const auto train_labels = pick(data.labels, train);
        const auto test_windows = pick(data.windows, test);
        const auto stage = fit_feature_stage(train_windows, train_labels, channels);
        const Eigen::MatrixXd x_train = stage.features(train_windows);
        const Eigen::MatrixXd x_test = stage.features(test_windows);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto svm = train_svm(x_train, train_labels, grid[g], options.svm);
            for (std::size_t t = 0; t < test.size(); ++t) {
                scores[g][test[t]] = svm.score(x_test.row(static_cast<Eigen::Index>(t)).transpose());
            }
        }
    }

    double best = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t tp = 0, tn = 0;
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            const bool predicted_lrp = scores[g][i] > 0.0;
            if (data.labels[i] == Label::lrp && predicted_lrp) ++tp;
            if (data.labels[i] == Label::no_lrp && !predicted_lrp) ++tn;
        }
        const double ba = 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                                 static_cast<double>(tn) / static_cast<double>(neg));
        result.cv_balanced_accuracy[g] = ba;
        if (ba > best) {
            best = ba;
            result.best_c = grid[g];
        }
    }
    return result;
}

}  // namespace xtask::model
