#include "xtask/eval/sources.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/ingest/container.hpp"

namespace xtask::eval {

SubjectData synthetic_subject(const synth::SynthConfig& config, const onset::OnsetConfig& onset_config) {
    SubjectData subject;
    subject.subject = config.subject_id;
    for (const auto movement : {Movement::unilateral, Movement::bilateral}) {
        auto c = config;
        c.movement = movement;
        for (int set = 1; set <= c.sets; ++set) {
            auto generated = synth::generate_session(c, set);
            onset::label_onsets(generated.session, onset_config);
            subject.sets.push_back(preprocess_session(generated.session));
        }
    }
    return subject;
}

SubjectData cached_subject(const std::vector<std::string>& paths, const onset::OnsetConfig& onset_config) {
    SubjectData subject;
    for (const auto& path : paths) {
        auto session = ingest::load_session(path);
        if (subject.subject.empty()) subject.subject = session.subject_id;
        if (session.subject_id != subject.subject) {
            throw Error(ErrorKind::invalid_argument, fmt::format("{} holds subject '{}', expected '{}'", path,
                                                                 session.subject_id, subject.subject));
        }
        const bool labelled = std::any_of(session.trials.begin(), session.trials.end(),
                                          [](const Trial& t) { return t.onset_sample.has_value(); });
        if (!labelled) onset::label_onsets(session, onset_config);
        for (const auto& s : subject.sets) {
            if (s.movement == session.task && s.set_index == session.set_index) {
                throw Error(ErrorKind::invalid_argument,
                            fmt::format("{}: duplicate {} set {} for subject '{}'", path, to_string(session.task),
                                        session.set_index, subject.subject));
            }
        }
        subject.sets.push_back(preprocess_session(session));
    }
    return subject;
}

std::vector<SubjectFiles> group_by_subject(std::vector<std::string> paths) {
    std::sort(paths.begin(), paths.end());
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& path : paths) {
        const auto header = ingest::read_container_header(path);
        if (header.kind != "session") {
            throw Error(ErrorKind::format, fmt::format("{}: container holds '{}', expected a session", path, header.kind));
        }
        groups[header.meta.at("subject_id").get<std::string>()].push_back(path);
    }
    std::vector<SubjectFiles> out;
    for (auto& [subject, files] : groups) out.push_back({subject, std::move(files)});
    return out;
}

std::vector<std::string> list_caches(const std::string& directory) {
    std::error_code ec;
    if (!std::filesystem::is_directory(directory, ec)) {
        throw Error(ErrorKind::io, fmt::format("data directory '{}' does not exist", directory));
    }
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xtc") out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace xtask::eval
