#include "xtask/model/pipeline.hpp"

#include <fstream>

#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/ingest/container.hpp"

namespace xtask::model {

void add_training_instances(TrainingSet& set, std::span<const SignalMatrix> windows, std::size_t group) {
    const auto add = [&](int k, Label label) {
        if (k >= static_cast<int>(windows.size())) {
            throw Error(ErrorKind::invalid_argument, fmt::format("trial has no window {}", k));
        }
        set.windows.push_back(windows[static_cast<std::size_t>(k)]);
        set.labels.push_back(label);
        set.groups.push_back(group);
    };
    for (const int k : kLrpTrainingWindows) add(k, Label::lrp);
    for (const int k : kNoLrpTrainingWindows) add(k, Label::no_lrp);
}

PipelineModel fit_pipeline(const TrainingSet& data, const ChannelSet& channel_set, const PipelineOptions& options) {
    if (data.windows.size() != data.labels.size()) {
        throw Error(ErrorKind::invalid_argument, "training windows and labels differ in length");
    }
    for (const auto& w : data.windows) {
        if (static_cast<std::size_t>(w.rows()) != channel_set.channels.size()) {
            throw Error(ErrorKind::invalid_argument,
                        fmt::format("training window has {} channels, set '{}' has {}", w.rows(), channel_set.name,
                                    channel_set.channels.size()));
        }
    }
    PipelineModel model;
    model.channel_set = channel_set;

    const auto stage = fit_feature_stage(data.windows, data.labels, channel_set.channels);
    model.xdawn = stage.xdawn;
    model.normalizer = stage.normalizer;
    const Eigen::MatrixXd x = stage.features(data.windows);

    const auto search = grid_search(data, channel_set.channels, {options.svm, options.seed, options.folds});
    model.svm = train_svm(x, data.labels, search.best_c, options.svm);

    std::vector<double> scores(data.labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = model.svm.score(x.row(static_cast<Eigen::Index>(i)).transpose());
    model.platt = fit_platt(scores, data.labels);

    auto& meta = model.meta;
    meta.chosen_c = search.best_c;
    meta.seed = options.seed;
    meta.cv_balanced_accuracy = search.cv_balanced_accuracy;
    meta.warnings = search.warnings;
    for (std::size_t j = 0; j < model.normalizer.degenerate.size(); ++j) {
        if (model.normalizer.degenerate[j]) meta.warnings.push_back(fmt::format("feature {} is constant", j));
    }
    meta.lrp_instances = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), Label::lrp));
    meta.no_lrp_instances = data.labels.size() - meta.lrp_instances;
    return model;
}

Label label_from_probability(double probability) { return probability > 0.5 ? Label::lrp : Label::no_lrp; }

Prediction predict(const PipelineModel& model, const SignalMatrix& window) {
    if (static_cast<std::size_t>(window.rows()) != model.channel_set.channels.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("window has {} channels, model '{}' expects {}", window.rows(),
                                model.channel_set.name, model.channel_set.channels.size()));
    }
    const Eigen::VectorXd f = model.normalizer.apply(extract_features(apply_xdawn(model.xdawn, window)));
    Prediction p;
    p.probability = model.platt.probability(model.svm.score(f));
    p.label = label_from_probability(p.probability);
    return p;
}

namespace {

constexpr const char* kPipelineKind = "pipeline";

std::span<const double> values(const Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> values(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::VectorXd vector_block(const ingest::ContainerReader& r, const std::string& name) {
    const auto v = r.f64(name);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string serialize_pipeline(const PipelineModel& model) {
    ingest::ContainerWriter w(kPipelineKind);
    auto& meta = w.meta();
    meta["channel_set"] = {{"name", model.channel_set.name},
                           {"channels", model.channel_set.channels},
                           {"kind", model.channel_set.kind == ChannelSetKind::custom ? "custom" : "standard"}};
    meta["xdawn_channels"] = model.xdawn.channels;
    meta["degenerate"] = model.normalizer.degenerate;
    meta["svm"] = {{"formulation", to_string(model.svm.formulation)}, {"iterations", model.svm.iterations}};
    meta["platt_iterations"] = model.platt.iterations;
    meta["condition"] = model.meta.condition;
    meta["train_movement"] = model.meta.train_movement;
    meta["train_sets"] = model.meta.train_sets;
    meta["seed"] = model.meta.seed;
    meta["lrp_instances"] = model.meta.lrp_instances;
    meta["no_lrp_instances"] = model.meta.no_lrp_instances;
    meta["warnings"] = model.meta.warnings;

    const Eigen::MatrixXd& filters = model.xdawn.filters;  // column-major
    w.add_f64("xdawn/filters", values(filters),
              {static_cast<std::size_t>(filters.cols()), static_cast<std::size_t>(filters.rows())});
    w.add_f64("normalizer/mean", values(model.normalizer.mean), {static_cast<std::size_t>(model.normalizer.mean.size())});
    w.add_f64("normalizer/sd", values(model.normalizer.sd), {static_cast<std::size_t>(model.normalizer.sd.size())});
    w.add_f64("svm/weights", values(model.svm.weights), {static_cast<std::size_t>(model.svm.weights.size())});
    w.add_f64("svm/dual", values(model.svm.dual), {static_cast<std::size_t>(model.svm.dual.size())});
    const std::vector<double> scalars{model.svm.bias,
                                      model.svm.c,
                                      model.svm.class_weights.no_lrp,
                                      model.svm.class_weights.lrp,
                                      model.svm.objective,
                                      model.platt.a,
                                      model.platt.b,
                                      model.meta.chosen_c};
    w.add_f64("scalars", scalars, {scalars.size()});
    w.add_f64("cv_balanced_accuracy", model.meta.cv_balanced_accuracy, {model.meta.cv_balanced_accuracy.size()});
    return w.serialize();
}

PipelineModel deserialize_pipeline(std::string bytes, const std::string& source) {
    const auto r = ingest::ContainerReader::parse(std::move(bytes), source);
    if (r.kind() != kPipelineKind) {
        throw Error(ErrorKind::format, fmt::format("{}: container holds '{}', expected a pipeline", source, r.kind()));
    }
    try {
        const auto& meta = r.meta();
        PipelineModel m;
        const auto& cs = meta.at("channel_set");
        m.channel_set.name = cs.at("name").get<std::string>();
        m.channel_set.channels = cs.at("channels").get<std::vector<std::string>>();
        m.channel_set.kind = cs.at("kind").get<std::string>() == "custom" ? ChannelSetKind::custom : ChannelSetKind::standard;

        const auto shape = r.shape("xdawn/filters");
        const auto f = r.f64("xdawn/filters");
        m.xdawn.filters = Eigen::Map<const Eigen::MatrixXd>(f.data(), static_cast<Eigen::Index>(shape.at(1)),
                                                            static_cast<Eigen::Index>(shape.at(0)));
        m.xdawn.channels = meta.at("xdawn_channels").get<std::vector<std::string>>();
        m.normalizer.mean = vector_block(r, "normalizer/mean");
        m.normalizer.sd = vector_block(r, "normalizer/sd");
        m.normalizer.degenerate = meta.at("degenerate").get<std::vector<bool>>();
        m.svm.weights = vector_block(r, "svm/weights");
        m.svm.dual = vector_block(r, "svm/dual");
        m.svm.formulation = parse_svm_formulation(meta.at("svm").at("formulation").get<std::string>());
        m.svm.iterations = meta.at("svm").at("iterations").get<int>();
        const auto s = r.f64("scalars");
        if (s.size() != 8) throw Error(ErrorKind::format, fmt::format("{}: scalars block has {} entries", source, s.size()));
        m.svm.bias = s[0];
        m.svm.c = s[1];
        m.svm.class_weights = {s[2], s[3]};
        m.svm.objective = s[4];
        m.platt.a = s[5];
        m.platt.b = s[6];
        m.platt.iterations = meta.at("platt_iterations").get<int>();
        m.meta.chosen_c = s[7];
        const auto cv = r.f64("cv_balanced_accuracy");
        if (cv.size() != m.meta.cv_balanced_accuracy.size()) throw Error(ErrorKind::format, fmt::format("{}: bad CV block", source));
        std::copy(cv.begin(), cv.end(), m.meta.cv_balanced_accuracy.begin());
        m.meta.condition = meta.at("condition").get<std::string>();
        m.meta.train_movement = meta.at("train_movement").get<std::string>();
        m.meta.train_sets = meta.at("train_sets").get<std::vector<int>>();
        m.meta.seed = meta.at("seed").get<std::uint64_t>();
        m.meta.lrp_instances = meta.at("lrp_instances").get<std::size_t>();
        m.meta.no_lrp_instances = meta.at("no_lrp_instances").get<std::size_t>();
        m.meta.warnings = meta.at("warnings").get<std::vector<std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, fmt::format("{}: malformed pipeline metadata: {}", source, e.what()));
    }
}

void save_pipeline(const PipelineModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    const auto bytes = serialize_pipeline(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write model to {}", path));
}

PipelineModel load_pipeline(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open model {}", path));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_pipeline(std::move(bytes), path);
}

}  // namespace xtask::model
