#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "xtask/core/channels.hpp"
#include "xtask/core/config.hpp"
#include "xtask/error.hpp"
#include "xtask/eval/export.hpp"
#include "xtask/eval/sources.hpp"
#include "xtask/eval/study.hpp"
#include "xtask/ingest/brainvision.hpp"
#include "xtask/ingest/container.hpp"
#include "xtask/ingest/motion.hpp"
#include "xtask/ingest/session.hpp"
#include "xtask/model/pipeline.hpp"
#include "xtask/onset/onset.hpp"
#include "xtask/synth/synth.hpp"

namespace fs = std::filesystem;
using namespace xtask;

namespace {

constexpr std::string_view kVersion = "1.0.0";

bool parse_bool(const KeyValueConfig& config, std::string_view key, bool fallback) {
    const auto value = config.get(key);
    if (!value) return fallback;
    if (*value == "true" || *value == "1" || *value == "yes") return true;
    if (*value == "false" || *value == "0" || *value == "no") return false;
    throw Error(ErrorKind::invalid_argument, fmt::format("{} must be true or false, got '{}'", key, *value));
}

std::string require(const KeyValueConfig& config, std::string_view key) {
    auto value = config.get(key);
    if (!value || value->empty()) throw Error(ErrorKind::invalid_argument, fmt::format("missing required setting '{}'", key));
    return *value;
}

std::vector<int> parse_int_list(const std::string& text, std::string_view key) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        const auto v = parse_int(item);
        if (!v) throw Error(ErrorKind::invalid_argument, fmt::format("{}: '{}' is not an integer", key, item));
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
}

// Command-line settings that land in the effective config.
class Overrides {
public:
    void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option(flag, values_[key], help);
    }
    void bind_list(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option(flag, lists_[key], help)->delimiter(',');
    }
    void bind_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& value,
                   const std::string& help) {
        app->add_flag_callback(flag, [this, key, value] { values_[key] = value; }, help);
    }

    void apply(KeyValueConfig& config) const {
        for (const auto& [key, value] : values_) {
            if (!value.empty()) config.set(key, value);
        }
        for (const auto& [key, list] : lists_) {
            if (list.empty()) continue;
            std::string joined;
            for (std::size_t i = 0; i < list.size(); ++i) joined += (i ? "," : "") + list[i];
            config.set(key, joined);
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::vector<std::string>> lists_;
};

struct Manifest {
    std::string command;
    fs::path dir;
    std::string config_text;
    std::vector<fs::path> outputs;

    // output.dir is excluded so identical runs into different directories share a hash.
    std::string hash() const {
        auto c = KeyValueConfig::parse(config_text);
        KeyValueConfig hashed;
        for (const auto& e : c.entries()) {
            if (e.key != "output.dir") hashed.set(e.key, e.value);
        }
        return fmt::format("{:08x}", ingest::crc32_of(hashed.to_text()));
    }

    void add(const fs::path& path) { outputs.push_back(path); }

    // config.txt and manifest.json; every output is listed with its checksum.
    void write() const {
        write_text(dir / "config.txt", config_text);
        auto files = nlohmann::json::array();
        for (const auto& path : outputs) {
            const auto bytes = read_text(path.string());
            files.push_back({{"path", fs::relative(path, dir).generic_string()},
                             {"bytes", bytes.size()},
                             {"crc32", fmt::format("{:08x}", ingest::crc32_of(bytes))}});
        }
        const nlohmann::json manifest{{"command", command},
                                      {"version", kVersion},
                                      {"config_hash", hash()},
                                      {"config", "config.txt"},
                                      {"outputs", files}};
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    }
};

Manifest open_output(const std::string& command, const KeyValueConfig& config) {
    Manifest m;
    m.command = command;
    m.dir = require(config, "output.dir");
    std::error_code ec;
    fs::create_directories(m.dir, ec);
    if (ec) throw Error(ErrorKind::io, fmt::format("cannot create output directory '{}': {}", m.dir.string(), ec.message()));
    m.config_text = config.to_text();
    return m;
}

// Cache files from data.caches, else every *.xtc in data.dir.
std::vector<std::string> cache_paths(const KeyValueConfig& config) {
    if (const auto list = config.get("data.caches"); list && !list->empty()) {
        auto paths = split_list(*list);
        for (const auto& p : paths) {
            if (!fs::is_regular_file(p)) throw Error(ErrorKind::io, fmt::format("cache file '{}' does not exist", p));
        }
        return paths;
    }
    const auto dir = config.get("data.dir");
    if (!dir || dir->empty()) {
        throw Error(ErrorKind::invalid_argument, "no input data: set data.caches or data.dir (or XTASK_DATA_DIR)");
    }
    auto paths = eval::list_caches(*dir);
    if (paths.empty()) throw Error(ErrorKind::io, fmt::format("data directory '{}' holds no .xtc caches", *dir));
    return paths;
}

ChannelRegistry registry_from(const KeyValueConfig& config) {
    auto registry = ChannelRegistry::with_defaults();
    if (const auto file = config.get("channels.file"); file && !file->empty()) {
        registry.load_config(read_text(*file), *file);
    }
    return registry;
}

model::PipelineOptions pipeline_options(const KeyValueConfig& config) {
    model::PipelineOptions o;
    o.svm.formulation = model::parse_svm_formulation(config.get_or("model.formulation", "l1-weights"));
    o.svm.class_weights.lrp = config.get_double("model.class_weight_lrp", o.svm.class_weights.lrp);
    o.svm.class_weights.no_lrp = config.get_double("model.class_weight_no_lrp", o.svm.class_weights.no_lrp);
    o.seed = static_cast<std::uint64_t>(config.get_int("model.seed", 0));
    o.folds = static_cast<int>(config.get_int("model.folds", o.folds));
    return o;
}

eval::RelabelOptions relabel_options(const KeyValueConfig& config) {
    eval::RelabelOptions o;
    o.scan_fixed_window = parse_bool(config, "relabel.scan_fixed_window", o.scan_fixed_window);
    return o;
}

// One subject's sessions from the configured caches.
eval::SubjectData load_subject(const KeyValueConfig& config) {
    auto groups = eval::group_by_subject(cache_paths(config));
    const auto wanted = config.get_or("data.subject", "");
    if (!wanted.empty()) {
        std::erase_if(groups, [&](const eval::SubjectFiles& g) { return g.subject != wanted; });
        if (groups.empty()) throw Error(ErrorKind::invalid_argument, fmt::format("no caches for subject '{}'", wanted));
    }
    if (groups.size() != 1) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("caches hold {} subjects; choose one with data.subject (--subject)", groups.size()));
    }
    return eval::cached_subject(groups.front().paths, onset::OnsetConfig::from_config(config));
}

std::string cache_name(const ingest::SessionData& s) {
    return fmt::format("{}_{}_set{}.xtc", s.subject_id, to_string(s.task), s.set_index);
}

void cmd_ingest(const KeyValueConfig& config) {
    auto out = open_output("ingest", config);
    const auto vhdr = require(config, "ingest.vhdr");
    const auto motion_path = require(config, "ingest.motion");
    for (const auto& p : {vhdr, motion_path}) {
        if (!fs::is_regular_file(p)) throw Error(ErrorKind::io, fmt::format("input file '{}' does not exist", p));
    }
    std::optional<double> motion_rate;
    if (config.contains("ingest.motion_rate")) motion_rate = config.get_double("ingest.motion_rate", 0.0);
    const auto codes = ingest::MarkerCodes::from_config(config);
    auto session = ingest::synchronize(ingest::read_brainvision(vhdr), ingest::read_motion_csv(motion_path, motion_rate), codes);
    session.subject_id = require(config, "ingest.subject");
    session.task = parse_movement(require(config, "ingest.movement"));
    session.set_index = static_cast<int>(config.get_int("ingest.set_index", 1));
    session.trials = ingest::build_trials(session, codes, config.get_double("ingest.min_rest", kMinimumRestSeconds));
    for (auto& t : session.trials) {
        t.movement = session.task;
        t.set_index = session.set_index;
    }
    if (const auto emg = config.get("ingest.emg"); emg && !emg->empty()) {
        for (const auto& p : split_list(*emg)) {
            const auto bytes = read_text(p);
            session.attachments.push_back({fs::path(p).filename().string(), {bytes.begin(), bytes.end()}});
        }
    }
    const auto path = out.dir / cache_name(session);
    ingest::save_session(session, path.string());
    out.add(path);
    out.write();
    std::cout << path.string() << "\n";
}

void cmd_onsets(const KeyValueConfig& config) {
    auto out = open_output("onsets", config);
    const auto onset_config = onset::OnsetConfig::from_config(config);
    std::vector<ingest::SessionData> sessions;
    for (const auto& path : cache_paths(config)) {
        auto session = ingest::load_session(path);
        onset::label_onsets(session, onset_config);
        const auto labelled = out.dir / cache_name(session);
        if (fs::exists(labelled) && fs::equivalent(labelled, path)) {
            throw Error(ErrorKind::invalid_argument,
                        fmt::format("output would overwrite input '{}'; choose another output.dir", path));
        }
        ingest::save_session(session, labelled.string());
        out.add(labelled);
        sessions.push_back(std::move(session));
    }
    std::vector<const ingest::SessionData*> views;
    for (const auto& s : sessions) views.push_back(&s);
    const auto csv = out.dir / "onsets.csv";
    write_text(csv, onset::trial_table_csv(views));
    out.add(csv);
    out.write();
}

// A condition letter picks its training movement; a movement name is taken as is.
Movement train_movement(const std::string& text) {
    if (text.size() == 1) return study_condition(text).train;
    return parse_movement(text);
}

std::vector<int> chosen_sets(const KeyValueConfig& config, std::string_view key, const eval::SubjectData& subject,
                             Movement movement) {
    const auto available = subject.set_indices(movement);
    if (available.empty()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("subject '{}' has no {} sets", subject.subject, to_string(movement)));
    }
    const auto text = config.get_or(key, "");
    if (text.empty()) return available;
    auto sets = parse_int_list(text, key);
    for (const int s : sets) {
        if (std::find(available.begin(), available.end(), s) == available.end()) {
            throw Error(ErrorKind::invalid_argument,
                        fmt::format("{}: subject '{}' has no {} set {}", key, subject.subject, to_string(movement), s));
        }
    }
    return sets;
}

void cmd_train(const KeyValueConfig& config) {
    auto out = open_output("train", config);
    const auto subject = load_subject(config);
    const auto condition_text = require(config, "train.condition");
    const auto movement = train_movement(condition_text);
    const auto sets = chosen_sets(config, "train.sets", subject, movement);
    const auto registry = registry_from(config);
    const auto& channel_set = registry.get(config.get_or("train.channel_set", "custom-32"));

    const auto data = eval::build_training_set(subject, movement, sets, channel_set);
    auto model = model::fit_pipeline(data, channel_set, pipeline_options(config));
    model.meta.condition = condition_text;
    model.meta.train_movement = std::string(to_string(movement));
    model.meta.train_sets = sets;
    const auto path = out.dir / "model.xtm";
    model::save_pipeline(model, path.string());
    out.add(path);
    out.write();
    std::cout << fmt::format("{} C={} cv_ba={:.4f}\n", path.string(), model.meta.chosen_c,
                             *std::max_element(model.meta.cv_balanced_accuracy.begin(),
                                               model.meta.cv_balanced_accuracy.end()));
}

char condition_id(Movement train, Movement test) {
    for (const auto& c : study_conditions()) {
        if (c.train == train && c.test == test) return c.id;
    }
    throw Error(ErrorKind::invalid_argument,
                fmt::format("no study condition trains on {} and tests on {}", to_string(train), to_string(test)));
}

void cmd_evaluate(const KeyValueConfig& config) {
    auto out = open_output("evaluate", config);
    const auto model_path = require(config, "evaluate.model");
    if (!fs::is_regular_file(model_path)) throw Error(ErrorKind::io, fmt::format("model file '{}' does not exist", model_path));
    const auto model = model::load_pipeline(model_path);
    const auto subject = load_subject(config);
    const auto train = parse_movement(model.meta.train_movement);
    const auto test = parse_movement(config.get_or("evaluate.test_condition", model.meta.train_movement));
    const auto condition = condition_id(train, test);
    const auto relabel = relabel_options(config);

    std::vector<eval::SplitResult> results;
    for (const int set : chosen_sets(config, "evaluate.sets", subject, test)) {
        if (train == test && std::find(model.meta.train_sets.begin(), model.meta.train_sets.end(), set) !=
                                 model.meta.train_sets.end()) {
            throw Error(ErrorKind::invalid_argument,
                        fmt::format("{} set {} was used for training; evaluate on held-out sets", to_string(test), set));
        }
        const auto predictions = eval::predict_set(model, subject.get(test, set), relabel);
        const auto r = eval::score_predictions(predictions);
        results.push_back({subject.subject, condition, model.channel_set.name, model.meta.train_sets, set, r.tpr, r.tnr,
                           r.ba});
    }
    const auto path = out.dir / "results.csv";
    write_text(path, eval::results_csv(results));
    out.add(path);
    out.write();
}

void cmd_run_study(const KeyValueConfig& config, int jobs) {
    auto out = open_output("run-study", config);
    eval::StudyOptions options;
    options.conditions.clear();
    for (const auto& c : split_list(config.get_or("study.conditions", "A,B,C"))) {
        options.conditions.push_back(study_condition(c).id);
    }
    if (const auto sets = config.get("study.channel_sets"); sets && !sets->empty()) options.channel_sets = split_list(*sets);
    options.registry = registry_from(config);
    for (const auto& name : options.channel_sets) options.registry.get(name);
    options.pipeline = pipeline_options(config);
    options.relabel = relabel_options(config);
    options.jobs = jobs;

    auto onset_config = onset::OnsetConfig::from_config(config);
    const auto source = config.get_or("study.source", "cache");
    eval::StudyReport report;
    if (source == "synth") {
        const auto base = synth::SynthConfig::from_config(config);
        // The generator knows its switch delay; an explicit onset setting still wins.
        if (!config.contains("onset.release_delay_s")) onset_config.release_delay_s = base.release_delay;
        const auto seeds = parse_int_list(config.get_or("study.seeds", std::to_string(base.seed)), "study.seeds");
        const auto per_seed = static_cast<std::size_t>(config.get_int("study.subjects", 8));
        report = eval::run_study(seeds.size() * per_seed, [&](std::size_t i) {
            auto c = base;
            c.seed = static_cast<std::uint64_t>(seeds[i / per_seed]);
            c.subject_id = fmt::format("seed{}-sub{:02}", c.seed, i % per_seed + 1);
            return eval::synthetic_subject(c, onset_config);
        }, options);
    } else if (source == "cache") {
        const auto groups = eval::group_by_subject(cache_paths(config));
        report = eval::run_study(groups.size(), [&](std::size_t i) {
            return eval::cached_subject(groups[i].paths, onset_config);
        }, options);
    } else {
        throw Error(ErrorKind::invalid_argument, fmt::format("study.source must be cache or synth, got '{}'", source));
    }

    eval::export_report(report, out.dir.string(), parse_bool(config, "output.svg", true));
    out.add(out.dir / "results.csv");
    out.add(out.dir / "summary.csv");
    for (const auto& cell : report.cells()) {
        const auto svg = out.dir / eval::cell_svg_name(cell.condition, cell.channel_set);
        if (fs::exists(svg)) out.add(svg);
        std::cout << fmt::format("{} {:<12} n={:<3} BA {:.3f} +/- {:.3f}  TPR {:.3f}  TNR {:.3f}{}\n", cell.condition,
                                 cell.channel_set, cell.count, cell.mean_ba, cell.sd_ba, cell.mean_tpr, cell.mean_tnr,
                                 cell.imbalanced ? "  (imbalanced)" : "");
    }
    out.write();
}

void cmd_synth(const KeyValueConfig& config) {
    auto out = open_output("synth", config);
    const auto base = synth::SynthConfig::from_config(config);
    const auto subjects = config.get_int("synth.subjects", 1);
    const bool brainvision = parse_bool(config, "synth.brainvision", false);
    std::string truth = "subject,movement,set,trial,onset_sample,lrp_start_sample,release_sample\n";
    for (long long s = 0; s < subjects; ++s) {
        auto c = base;
        if (!config.contains("synth.subject")) c.subject_id = fmt::format("seed{}-sub{:02}", c.seed, s + 1);
        else if (subjects > 1) c.subject_id = fmt::format("{}-{:02}", base.subject_id, s + 1);
        for (const auto movement : {Movement::unilateral, Movement::bilateral}) {
            c.movement = movement;
            for (int set = 1; set <= c.sets; ++set) {
                const auto generated = synth::generate_session(c, set);
                const auto& session = generated.session;
                const auto path = out.dir / cache_name(session);
                ingest::save_session(session, path.string());
                out.add(path);
                if (brainvision) {
                    const auto stem = out.dir / fs::path(cache_name(session)).stem();
                    ingest::write_brainvision(session.eeg, stem.string() + ".vhdr");
                    ingest::write_motion_csv(session.motion, stem.string() + "_motion.csv");
                    for (const auto* ext : {".vhdr", ".vmrk", ".eeg"}) out.add(stem.string() + ext);
                    out.add(stem.string() + "_motion.csv");
                }
                const auto& t = generated.truth;
                for (std::size_t i = 0; i < t.onset_samples.size(); ++i) {
                    truth += fmt::format("{},{},{},{},{},{},{}\n", c.subject_id, to_string(movement), set, i,
                                         t.onset_samples[i], t.lrp_start_samples[i], t.release_samples[i]);
                }
            }
        }
    }
    const auto truth_path = out.dir / "ground_truth.csv";
    write_text(truth_path, truth);
    out.add(truth_path);
    out.write();
}

void report_error(const std::exception& e) {
    nlohmann::json j{{"error", "internal"}, {"message", e.what()}};
    if (const auto* err = dynamic_cast<const Error*>(&e)) j["error"] = std::string(to_string(err->kind()));
    if (const auto* perr = dynamic_cast<const ParseError*>(&e)) {
        j["file"] = perr->file();
        j["line"] = perr->line();
        j["reason"] = perr->reason();
    }
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Movement-intention EEG classification harness"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    std::vector<std::string> config_files;
    std::vector<std::string> settings;
    int jobs = 1;
    app.add_option("-c,--config", config_files, "key = value config file; later files override earlier ones");
    app.add_option("-s,--set", settings, "key=value override, applied last");
    app.add_option("-j,--jobs", jobs, "worker threads (does not affect results)")->check(CLI::PositiveNumber);

    Overrides overrides;
    const auto common_out = [&](CLI::App* cmd) { overrides.bind(cmd, "-o,--out", "output.dir", "output directory"); };
    const auto common_data = [&](CLI::App* cmd) {
        overrides.bind_list(cmd, "--cache", "data.caches", "session cache files");
        overrides.bind(cmd, "--data-dir", "data.dir", "directory of .xtc caches (default: $XTASK_DATA_DIR)");
    };

    auto* ingest_cmd = app.add_subcommand("ingest", "BrainVision + motion CSV -> session cache");
    overrides.bind(ingest_cmd, "--vhdr", "ingest.vhdr", "BrainVision header file");
    overrides.bind(ingest_cmd, "--motion", "ingest.motion", "motion CSV file");
    overrides.bind(ingest_cmd, "--motion-rate", "ingest.motion_rate", "motion sample rate when the CSV lacks one");
    overrides.bind(ingest_cmd, "--subject", "ingest.subject", "subject id");
    overrides.bind(ingest_cmd, "--movement", "ingest.movement", "unilateral or bilateral");
    overrides.bind(ingest_cmd, "--set-index", "ingest.set_index", "recording set index");
    overrides.bind_list(ingest_cmd, "--emg", "ingest.emg", "EMG files stored opaquely");
    common_out(ingest_cmd);

    auto* onsets_cmd = app.add_subcommand("onsets", "label movement onsets -> trial CSV and labelled caches");
    common_data(onsets_cmd);
    overrides.bind(onsets_cmd, "--threshold", "onset.threshold_mm", "onset threshold in mm");
    overrides.bind(onsets_cmd, "--release-delay", "onset.release_delay_s", "switch release delay in s");
    common_out(onsets_cmd);

    auto* train_cmd = app.add_subcommand("train", "fit one pipeline -> model file");
    common_data(train_cmd);
    overrides.bind(train_cmd, "--subject", "data.subject", "subject id when caches hold several");
    overrides.bind(train_cmd, "--condition", "train.condition", "A, B, C, unilateral or bilateral");
    overrides.bind(train_cmd, "--train-sets", "train.sets", "comma-separated set indices (default: all)");
    overrides.bind(train_cmd, "--channel-set", "train.channel_set", "channel set name");
    overrides.bind(train_cmd, "--seed", "model.seed", "cross-validation seed");
    overrides.bind(train_cmd, "--svm", "model.formulation", "l1-weights or l2-weights");
    common_out(train_cmd);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a model on held-out sets -> results CSV");
    common_data(evaluate_cmd);
    overrides.bind(evaluate_cmd, "--subject", "data.subject", "subject id when caches hold several");
    overrides.bind(evaluate_cmd, "--model", "evaluate.model", "model file from train");
    overrides.bind(evaluate_cmd, "--test-condition", "evaluate.test_condition", "unilateral or bilateral");
    overrides.bind(evaluate_cmd, "--test-sets", "evaluate.sets", "comma-separated set indices (default: all)");
    common_out(evaluate_cmd);

    auto* study_cmd = app.add_subcommand("run-study", "full condition x channel-set study -> report files");
    common_data(study_cmd);
    overrides.bind(study_cmd, "--source", "study.source", "cache or synth");
    overrides.bind(study_cmd, "--subjects", "study.subjects", "synthetic subjects per seed");
    overrides.bind_list(study_cmd, "--seeds", "study.seeds", "synthetic seeds");
    overrides.bind_list(study_cmd, "--conditions", "study.conditions", "subset of A,B,C");
    overrides.bind_list(study_cmd, "--channel-sets", "study.channel_sets", "channel set names");
    overrides.bind(study_cmd, "--svm", "model.formulation", "l1-weights or l2-weights");
    overrides.bind_flag(study_cmd, "--no-svg", "output.svg", "false", "skip SVG box plots");
    common_out(study_cmd);

    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic sessions -> caches and ground truth");
    overrides.bind(synth_cmd, "--seed", "synth.seed", "generator seed");
    overrides.bind(synth_cmd, "--subjects", "synth.subjects", "number of subjects");
    overrides.bind(synth_cmd, "--subject", "synth.subject", "subject id");
    overrides.bind(synth_cmd, "--snr", "synth.snr", "|LRP peak| / noise SD");
    overrides.bind_flag(synth_cmd, "--brainvision", "synth.brainvision", "true", "also write BrainVision + motion CSV");
    common_out(synth_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        KeyValueConfig config;
        if (const char* dir = std::getenv("XTASK_DATA_DIR"); dir && *dir) config.set("data.dir", dir);
        for (const auto& file : config_files) {
            if (!fs::is_regular_file(file)) throw Error(ErrorKind::io, fmt::format("config file '{}' does not exist", file));
            const auto loaded = KeyValueConfig::load(file);
            for (const auto& e : loaded.entries()) config.set(e.key, e.value);
        }
        overrides.apply(config);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::invalid_argument, fmt::format("--set expects key=value, got '{}'", s));
            config.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        }
        if (!config.contains("output.dir")) config.set("output.dir", "xtask-out");

        if (ingest_cmd->parsed()) cmd_ingest(config);
        else if (onsets_cmd->parsed()) cmd_onsets(config);
        else if (train_cmd->parsed()) cmd_train(config);
        else if (evaluate_cmd->parsed()) cmd_evaluate(config);
        else if (study_cmd->parsed()) cmd_run_study(config, jobs);
        else if (synth_cmd->parsed()) cmd_synth(config);
        return 0;
    } catch (const std::exception& e) {
        report_error(e);
        return 1;
    }
}
