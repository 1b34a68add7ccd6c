#include "xtask/eval/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::eval {

std::vector<int> SubjectData::set_indices(Movement movement) const {
    std::vector<int> out;
    for (const auto& s : sets) {
        if (s.movement == movement) out.push_back(s.set_index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

const PreprocessedSet& SubjectData::get(Movement movement, int set_index) const {
    for (const auto& s : sets) {
        if (s.movement == movement && s.set_index == set_index) return s;
    }
    throw Error(ErrorKind::invalid_argument,
                fmt::format("subject {} has no {} set {}", subject, to_string(movement), set_index));
}

PreprocessedSet preprocess_session(const ingest::SessionData& session) {
    PreprocessedSet out;
    out.subject = session.subject_id;
    out.movement = session.task;
    out.set_index = session.set_index;
    out.channel_names = session.eeg.channel_names();
    for (const auto& trial : session.trials) {
        if (!trial.valid) {
            out.skipped.emplace_back(trial.index, trial.reason.empty() ? "invalid" : trial.reason);
            continue;
        }
        if (!trial.onset_sample) {
            out.skipped.emplace_back(trial.index, "no onset");
            continue;
        }
        try {
            PreprocessedTrial p;
            p.trial = {session.subject_id, session.task, session.set_index, trial.index};
            p.windows = preprocess::preprocess_trial(session.eeg, *trial.onset_sample);
            out.trials.push_back(std::move(p));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::preprocess) throw;
            out.skipped.emplace_back(trial.index, e.what());
        }
    }
    return out;
}

SignalMatrix select_rows(const SignalMatrix& window, std::span<const std::size_t> rows) {
    SignalMatrix out(static_cast<Eigen::Index>(rows.size()), window.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = window.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

std::vector<Split> leave_one_set_out(const std::vector<int>& sets) {
    if (sets.size() != 3) {
        throw Error(ErrorKind::invalid_argument, fmt::format("leave-one-set-out needs 3 sets, got {}", sets.size()));
    }
    std::vector<Split> out;
    for (const int test : sets) {
        Split s;
        s.test_set = test;
        for (const int t : sets) {
            if (t != test) s.train_sets.push_back(t);
        }
        out.push_back(std::move(s));
    }
    return out;
}

model::TrainingSet build_training_set(const SubjectData& subject, Movement movement, const std::vector<int>& sets,
                                      const ChannelSet& channel_set) {
    model::TrainingSet data;
    std::size_t group = 0;
    for (const int s : sets) {
        const auto& set = subject.get(movement, s);
        const auto rows = channel_indices(set.channel_names, channel_set);
        for (const auto& trial : set.trials) {
            if (trial.trial.movement != movement || trial.trial.set_index != s) {
                throw Error(ErrorKind::invalid_argument, "training window provenance does not match its set");
            }
            std::vector<SignalMatrix> selected;
            selected.reserve(trial.windows.size());
            for (const auto& w : trial.windows) selected.push_back(select_rows(w, rows));
            model::add_training_instances(data, selected, group++);
        }
    }
    return data;
}

std::vector<TrialPrediction> predict_set(const model::PipelineModel& model, const PreprocessedSet& set,
                                         const RelabelOptions& relabel_options) {
    const auto rows = channel_indices(set.channel_names, model.channel_set);
    std::vector<TrialPrediction> out;
    out.reserve(set.trials.size());
    for (const auto& trial : set.trials) {
        if (trial.windows.size() != static_cast<std::size_t>(preprocess::kWindowCount)) {
            throw Error(ErrorKind::invalid_argument, "test trial does not hold 81 windows");
        }
        TrialPrediction p;
        p.trial = trial.trial;
        for (std::size_t k = 0; k < trial.windows.size(); ++k) {
            const auto pred = model::predict(model, select_rows(trial.windows[k], rows));
            p.probability[k] = pred.probability;
            p.predicted[k] = pred.label;
        }
        p.truth = relabel(p.predicted, relabel_options);
        out.push_back(std::move(p));
    }
    return out;
}

Rates score_predictions(const std::vector<TrialPrediction>& predictions) {
    Confusion total;
    for (const auto& p : predictions) total += confusion(p.predicted, p.truth);
    return rates(total);
}

SplitResult run_split(const SubjectData& subject, const StudyCondition& condition, const ChannelSet& channel_set,
                      const Split& split, const StudyOptions& options) {
    if (std::find(split.train_sets.begin(), split.train_sets.end(), split.test_set) != split.train_sets.end()) {
        throw Error(ErrorKind::invalid_argument, "test set also appears among the training sets");
    }
    const auto data = build_training_set(subject, condition.train, split.train_sets, channel_set);
    auto model = model::fit_pipeline(data, channel_set, options.pipeline);
    model.meta.condition = std::string(1, condition.id);
    model.meta.train_movement = std::string(to_string(condition.train));
    model.meta.train_sets = split.train_sets;

    const auto& test = subject.get(condition.test, split.test_set);
    const auto predictions = predict_set(model, test, options.relabel);
    for (const auto& p : predictions) {
        if (p.trial.movement != condition.test || p.trial.set_index != split.test_set) {
            throw Error(ErrorKind::invalid_argument, "test window provenance does not match the split");
        }
    }
    const auto r = score_predictions(predictions);
    return {subject.subject, condition.id, channel_set.name, split.train_sets, split.test_set, r.tpr, r.tnr, r.ba};
}

std::vector<SplitResult> run_condition(const SubjectData& subject, const StudyCondition& condition,
                                       const ChannelSet& channel_set, const StudyOptions& options) {
    const auto train_sets = subject.set_indices(condition.train);
    const auto test_sets = subject.set_indices(condition.test);
    if (train_sets != test_sets) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("subject {}: {} and {} set indices differ", subject.subject, to_string(condition.train),
                                to_string(condition.test)));
    }
    std::vector<SplitResult> out;
    for (const auto& split : leave_one_set_out(train_sets)) {
        out.push_back(run_split(subject, condition, channel_set, split, options));
    }
    return out;
}

void sort_results(std::vector<SplitResult>& results) {
    std::stable_sort(results.begin(), results.end(), [](const SplitResult& a, const SplitResult& b) {
        return std::tie(a.condition, a.channel_set, a.subject, a.test_set) <
               std::tie(b.condition, b.channel_set, b.subject, b.test_set);
    });
}

std::vector<CellSummary> summarize(std::span<const SplitResult> results) {
    std::map<std::pair<char, std::string>, std::vector<const SplitResult*>> cells;
    for (const auto& r : results) cells[{r.condition, r.channel_set}].push_back(&r);
    std::vector<CellSummary> out;
    for (const auto& [key, members] : cells) {
        CellSummary c;
        c.condition = key.first;
        c.channel_set = key.second;
        c.count = members.size();
        const auto n = static_cast<double>(members.size());
        for (const auto* r : members) {
            c.mean_ba += r->ba;
            c.mean_tpr += r->tpr;
            c.mean_tnr += r->tnr;
        }
        c.mean_ba /= n;
        c.mean_tpr /= n;
        c.mean_tnr /= n;
        if (members.size() > 1) {
            double ss = 0.0;
            for (const auto* r : members) ss += (r->ba - c.mean_ba) * (r->ba - c.mean_ba);
            c.sd_ba = std::sqrt(ss / (n - 1.0));
        }
        c.imbalanced = std::abs(c.mean_tpr - c.mean_tnr) > kImbalanceLimit;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<CellSummary> StudyReport::cells() const { return summarize(results); }

StudyReport run_study(std::size_t subject_count, const std::function<SubjectData(std::size_t)>& load,
                      const StudyOptions& options) {
    struct Task {
        const StudyCondition* condition;
        ChannelSet channel_set;
        Split split;
    };
    StudyReport report;
    for (std::size_t s = 0; s < subject_count; ++s) {
        const SubjectData subject = load(s);
        std::vector<Task> tasks;
        for (const char id : options.conditions) {
            const auto& condition = study_condition(id);
            const auto sets = subject.set_indices(condition.train);
            if (sets != subject.set_indices(condition.test)) {
                throw Error(ErrorKind::invalid_argument,
                            fmt::format("subject {}: train and test set indices differ", subject.subject));
            }
            for (const auto& name : options.channel_sets) {
                for (auto& split : leave_one_set_out(sets)) {
                    tasks.push_back({&condition, options.registry.get(name), std::move(split)});
                }
            }
        }
        std::vector<SplitResult> results(tasks.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto worker = [&] {
            for (std::size_t i = next++; i < tasks.size(); i = next++) {
                try {
                    results[i] = run_split(subject, *tasks[i].condition, tasks[i].channel_set, tasks[i].split, options);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = tasks.size();
                }
            }
        };
        const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t j = 0; j < std::min(jobs, tasks.size()); ++j) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);
        report.results.insert(report.results.end(), results.begin(), results.end());
    }
    sort_results(report.results);
    return report;
}

}  // namespace xtask::eval
