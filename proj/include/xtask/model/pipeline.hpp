#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xtask/core/channels.hpp"
#include "xtask/core/types.hpp"
#include "xtask/model/features.hpp"
#include "xtask/model/grid_search.hpp"
#include "xtask/model/platt.hpp"
#include "xtask/model/svm.hpp"
#include "xtask/model/xdawn.hpp"
#include "xtask/preprocess/windows.hpp"

namespace xtask::model {

using preprocess::kLrpTrainingWindows;
using preprocess::kNoLrpTrainingWindows;

struct PipelineOptions {
    SvmOptions svm;
    std::uint64_t seed = 0;
    int folds = kDefaultFolds;
};

struct PipelineMetadata {
    std::string condition;
    std::string train_movement;
    std::vector<int> train_sets;
    double chosen_c = 0.0;
    std::uint64_t seed = 0;
    std::size_t lrp_instances = 0;
    std::size_t no_lrp_instances = 0;
    std::array<double, kGridSize> cv_balanced_accuracy{};
    std::vector<std::string> warnings;

    bool operator==(const PipelineMetadata&) const = default;
};

struct PipelineModel {
    ChannelSet channel_set;
    SpatialFilterModel xdawn;
    FeatureNormalizer normalizer;
    LinearSvmModel svm;
    PlattCalibrator platt;
    PipelineMetadata meta;

    bool operator==(const PipelineModel&) const = default;
};

/// The five training instances of one trial, appended to `set` under `group`.
/// `windows` holds the trial's 81 preprocessed windows.
void add_training_instances(TrainingSet& set, std::span<const SignalMatrix> windows, std::size_t group);

/// xDAWN -> features -> normaliser -> grid search -> SVM -> Platt, each on
/// the training windows only. Windows must hold exactly the set's channels.
PipelineModel fit_pipeline(const TrainingSet& data, const ChannelSet& channel_set, const PipelineOptions& options = {});

struct Prediction {
    double probability = 0.0;
    Label label = Label::no_lrp;
};

/// LRP iff p > 0.5.
Label label_from_probability(double probability);

Prediction predict(const PipelineModel& model, const SignalMatrix& window);

std::string serialize_pipeline(const PipelineModel& model);
PipelineModel deserialize_pipeline(std::string bytes, const std::string& source = "<model>");
void save_pipeline(const PipelineModel& model, const std::string& path);
PipelineModel load_pipeline(const std::string& path);

}  // namespace xtask::model
