#pragma once

#include <string>
#include <vector>

#include "xtask/eval/study.hpp"
#include "xtask/onset/onset.hpp"
#include "xtask/synth/synth.hpp"

namespace xtask::eval {

/// Both movement tasks, `config.sets` sets each, generated for
/// `config.subject_id`, onset-labelled and preprocessed.
SubjectData synthetic_subject(const synth::SynthConfig& config, const onset::OnsetConfig& onset_config);

/// Loads cached sessions of one subject. Sessions without any onset label are
/// labelled with `onset_config`; already labelled ones are used as stored.
SubjectData cached_subject(const std::vector<std::string>& paths, const onset::OnsetConfig& onset_config);

struct SubjectFiles {
    std::string subject;
    std::vector<std::string> paths;
};

/// Groups cache files by the subject recorded in their headers, ordered by
/// subject id, paths sorted within each subject.
std::vector<SubjectFiles> group_by_subject(std::vector<std::string> paths);

/// `*.xtc` files directly inside `directory`, sorted.
std::vector<std::string> list_caches(const std::string& directory);

}  // namespace xtask::eval
