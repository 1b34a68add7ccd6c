#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xtask/core/channels.hpp"
#include "xtask/core/types.hpp"
#include "xtask/eval/metrics.hpp"
#include "xtask/eval/relabel.hpp"
#include "xtask/ingest/session.hpp"
#include "xtask/model/pipeline.hpp"
#include "xtask/preprocess/windows.hpp"

namespace xtask::eval {

/// 81 preprocessed windows of one trial over every recorded channel.
struct PreprocessedTrial {
    preprocess::Provenance trial;
    std::vector<SignalMatrix> windows;
};

struct PreprocessedSet {
    std::string subject;
    Movement movement = Movement::unilateral;
    int set_index = 0;
    std::vector<std::string> channel_names;
    std::vector<PreprocessedTrial> trials;
    /// Trials left out, with reasons (invalid, no onset, insufficient history).
    std::vector<std::pair<std::size_t, std::string>> skipped;
};

/// All sets of one subject; raw recordings are not kept.
struct SubjectData {
    std::string subject;
    std::vector<PreprocessedSet> sets;

    /// Sorted set indices recorded for `movement`.
    std::vector<int> set_indices(Movement movement) const;
    const PreprocessedSet& get(Movement movement, int set_index) const;
};

/// Windows of every valid, onset-labelled trial in the session.
PreprocessedSet preprocess_session(const ingest::SessionData& session);

/// Rows of `set` channels, in set order.
SignalMatrix select_rows(const SignalMatrix& window, std::span<const std::size_t> rows);

struct TrialPrediction {
    preprocess::Provenance trial;
    std::array<double, preprocess::kWindowCount> probability{};
    LabelVector predicted{};
    LabelVector truth{};
};

struct SplitResult {
    std::string subject;
    char condition = 'A';
    std::string channel_set;
    std::vector<int> train_sets;
    int test_set = 0;
    double tpr = 0.0;
    double tnr = 0.0;
    double ba = 0.0;

    bool operator==(const SplitResult&) const = default;
};

/// One leave-one-set-out permutation.
struct Split {
    std::vector<int> train_sets;
    int test_set = 0;
};

/// Three splits over three set indices, in test-set order.
std::vector<Split> leave_one_set_out(const std::vector<int>& sets);

struct StudyOptions {
    std::vector<char> conditions{'A', 'B', 'C'};
    std::vector<std::string> channel_sets{"custom-32", "custom-21", "custom-16", "custom-8",
                                          "custom-4",  "standard-32", "standard-21", "standard-16"};
    ChannelRegistry registry = ChannelRegistry::with_defaults();
    model::PipelineOptions pipeline;
    RelabelOptions relabel;
    int jobs = 1;
};

/// Training instances from the given sets of one movement, channel rows
/// selected. Group ids keep each trial's windows together.
model::TrainingSet build_training_set(const SubjectData& subject, Movement movement, const std::vector<int>& sets,
                                      const ChannelSet& channel_set);

/// Predictions and relabelled ground truth for every trial of a set.
std::vector<TrialPrediction> predict_set(const model::PipelineModel& model, const PreprocessedSet& set,
                                         const RelabelOptions& relabel);

/// Pooled rates over a list of trial predictions.
Rates score_predictions(const std::vector<TrialPrediction>& predictions);

/// Fit and score one split.
SplitResult run_split(const SubjectData& subject, const StudyCondition& condition, const ChannelSet& channel_set,
                      const Split& split, const StudyOptions& options);

/// The three leave-one-set-out splits for one subject.
std::vector<SplitResult> run_condition(const SubjectData& subject, const StudyCondition& condition,
                                       const ChannelSet& channel_set, const StudyOptions& options);

struct CellSummary {
    char condition = 'A';
    std::string channel_set;
    std::size_t count = 0;
    double mean_ba = 0.0, sd_ba = 0.0;
    double mean_tpr = 0.0, mean_tnr = 0.0;
    /// |mean TPR - mean TNR| > 0.2.
    bool imbalanced = false;
};

inline constexpr double kImbalanceLimit = 0.2;

struct StudyReport {
    std::vector<SplitResult> results;  // sorted by (condition, channel set, subject, test set)

    std::vector<CellSummary> cells() const;
};

/// Aggregates grouped by (condition, channel set). SD is the sample SD.
std::vector<CellSummary> summarize(std::span<const SplitResult> results);

/// Stable ordering for reports: condition, channel set, subject, test set.
void sort_results(std::vector<SplitResult>& results);

/// Runs the condition x channel-set matrix for subjects produced one at a
/// time by `load`, so only one subject's windows are resident.
StudyReport run_study(std::size_t subject_count, const std::function<SubjectData(std::size_t)>& load,
                      const StudyOptions& options);

}  // namespace xtask::eval
