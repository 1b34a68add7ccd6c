#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include <fmt/format.h>
#include <json.hpp>

#include "doctest.h"

#include "support/tempdir.hpp"
#include "xtask/eval/export.hpp"

namespace fs = std::filesystem;
using xtask::test::read_file;
using xtask::test::TempDir;

namespace {

struct Run {
    int exit_code = -1;
    std::string err;
};

// Runs the CLI with `args`; stderr is captured through a file.
Run cli(const TempDir& dir, const std::string& args) {
    const auto err_path = dir.file("stderr.txt");
    const std::string command = fmt::format("cd '{}' && '{}' {} 2> '{}' > /dev/null", dir.path().string(), XTASK_CLI_PATH,
                                            args, err_path);
    const int status = std::system(command.c_str());
    Run r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = fs::exists(err_path) ? read_file(err_path) : "";
    return r;
}

constexpr const char* kDelay = "-s onset.release_delay_s=0.02";

// One small synthetic subject written as caches into <dir>/syn.
void synth_caches(const TempDir& dir) {
    REQUIRE(cli(dir, "synth --seed 3 --subjects 1 -s synth.trials_per_set=6 --out syn").exit_code == 0);
}

}  // namespace

TEST_CASE("synth then run-study twice gives byte-identical reports") {
    TempDir dir;
    synth_caches(dir);
    CHECK(fs::exists(dir.file("syn/seed3-sub01_unilateral_set1.xtc")));
    CHECK(fs::exists(dir.file("syn/seed3-sub01_bilateral_set3.xtc")));
    CHECK(fs::exists(dir.file("syn/ground_truth.csv")));

    const std::string study = fmt::format("run-study --data-dir syn {} --conditions A,C --channel-sets custom-4", kDelay);
    REQUIRE(cli(dir, study + " --out r1").exit_code == 0);
    REQUIRE(cli(dir, study + " --out r2").exit_code == 0);
    const auto a = read_file(dir.file("r1/results.csv"));
    CHECK(a == read_file(dir.file("r2/results.csv")));
    CHECK(read_file(dir.file("r1/summary.csv")) == read_file(dir.file("r2/summary.csv")));
    CHECK(fs::exists(dir.file("r1/A_custom-4.svg")));

    const auto results = xtask::eval::parse_results_csv(a);
    CHECK(results.size() == 6);
    for (const auto& r : results) CHECK(r.subject == "seed3-sub01");

    const auto m1 = nlohmann::json::parse(read_file(dir.file("r1/manifest.json")));
    const auto m2 = nlohmann::json::parse(read_file(dir.file("r2/manifest.json")));
    CHECK(m1.at("config_hash") == m2.at("config_hash"));
    CHECK(m1.at("command") == "run-study");
    bool listed = false;
    for (const auto& f : m1.at("outputs")) listed = listed || f.at("path") == "results.csv";
    CHECK(listed);
}

TEST_CASE("the echoed config replays to identical outputs") {
    TempDir dir;
    synth_caches(dir);
    REQUIRE(cli(dir, fmt::format("run-study --data-dir syn {} --conditions B --channel-sets custom-8 --no-svg --out first",
                                 kDelay))
                .exit_code == 0);
    const auto config = read_file(dir.file("first/config.txt"));
    CHECK(config.find("study.conditions = B") != std::string::npos);
    CHECK(config.find("output.svg = false") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.file("first/B_custom-8.svg")));
    REQUIRE(cli(dir, "run-study -c first/config.txt --out replay").exit_code == 0);
    CHECK(read_file(dir.file("replay/results.csv")) == read_file(dir.file("first/results.csv")));
    CHECK(nlohmann::json::parse(read_file(dir.file("replay/manifest.json"))).at("config_hash") ==
          nlohmann::json::parse(read_file(dir.file("first/manifest.json"))).at("config_hash"));
}

TEST_CASE("train bilateral then evaluate unilateral realises condition C") {
    TempDir dir;
    synth_caches(dir);
    REQUIRE(cli(dir, fmt::format("train --data-dir syn {} --condition bilateral --train-sets 1,2 --channel-set custom-4 "
                                 "--out tr",
                                 kDelay))
                .exit_code == 0);
    REQUIRE(fs::exists(dir.file("tr/model.xtm")));
    REQUIRE(cli(dir, fmt::format("evaluate --data-dir syn {} --model tr/model.xtm --test-condition unilateral "
                                 "--test-sets 3 --out ev",
                                 kDelay))
                .exit_code == 0);
    const auto rows = xtask::eval::parse_results_csv(read_file(dir.file("ev/results.csv")));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].condition == 'C');
    CHECK(rows[0].train_sets == std::vector<int>{1, 2});
    CHECK(rows[0].test_set == 3);

    // Same split through the study path.
    REQUIRE(cli(dir, fmt::format("run-study --data-dir syn {} --conditions C --channel-sets custom-4 --no-svg --out st",
                                 kDelay))
                .exit_code == 0);
    const auto study = xtask::eval::parse_results_csv(read_file(dir.file("st/results.csv")));
    const auto match = std::find_if(study.begin(), study.end(), [](const auto& r) { return r.test_set == 3; });
    REQUIRE(match != study.end());
    CHECK(*match == rows[0]);

    // A leaking split is refused.
    const auto leak = cli(dir, fmt::format("evaluate --data-dir syn {} --model tr/model.xtm --test-condition bilateral "
                                           "--test-sets 2 --out leak",
                                           kDelay));
    CHECK(leak.exit_code != 0);
}

TEST_CASE("onsets labels copies and never overwrites its inputs") {
    TempDir dir;
    synth_caches(dir);
    const auto before = read_file(dir.file("syn/seed3-sub01_unilateral_set2.xtc"));
    const auto refused = cli(dir, fmt::format("onsets --data-dir syn {} --out syn", kDelay));
    CHECK(refused.exit_code != 0);
    CHECK(refused.err.find("overwrite") != std::string::npos);
    REQUIRE(cli(dir, fmt::format("onsets --data-dir syn {} --out labelled", kDelay)).exit_code == 0);
    CHECK(read_file(dir.file("syn/seed3-sub01_unilateral_set2.xtc")) == before);
    const auto csv = read_file(dir.file("labelled/onsets.csv"));
    CHECK(csv.rfind("subject,set,trial,condition,onset_sample,valid,reason\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 * 6);
    CHECK(fs::exists(dir.file("labelled/seed3-sub01_bilateral_set1.xtc")));
}

TEST_CASE("failures exit nonzero with error JSON naming the path") {
    TempDir dir;
    const auto missing = cli(dir, "run-study --data-dir /nonexistent/xtask-data --out r");
    CHECK(missing.exit_code != 0);
    const auto j = nlohmann::json::parse(missing.err);
    CHECK(j.at("error") == "io");
    CHECK(j.at("message").get<std::string>().find("/nonexistent/xtask-data") != std::string::npos);

    const auto cache = cli(dir, "train --cache nothing.xtc --out r");
    CHECK(cache.exit_code != 0);
    CHECK(nlohmann::json::parse(cache.err).at("message").get<std::string>().find("nothing.xtc") != std::string::npos);

    const auto config = cli(dir, "run-study -c absent.cfg --out r");
    CHECK(config.exit_code != 0);
    CHECK(nlohmann::json::parse(config.err).at("message").get<std::string>().find("absent.cfg") != std::string::npos);

    xtask::test::write_file(dir.file("bad.cfg"), "no equals here\n");
    const auto parse = cli(dir, "run-study -c bad.cfg --out r");
    CHECK(parse.exit_code != 0);
    const auto pj = nlohmann::json::parse(parse.err);
    CHECK(pj.at("error") == "parse");
    CHECK(pj.at("line") == 1);

    CHECK(cli(dir, "").exit_code != 0);
    CHECK(cli(dir, "run-study --set nonsense --out r").exit_code != 0);
}

TEST_CASE("XTASK_DATA_DIR supplies the default data directory") {
    TempDir dir;
    synth_caches(dir);
    const auto command = fmt::format("cd '{}' && XTASK_DATA_DIR=syn '{}' run-study {} --conditions A --channel-sets "
                                     "custom-4 --no-svg --out env > /dev/null 2>&1",
                                     dir.path().string(), XTASK_CLI_PATH, kDelay);
    REQUIRE(std::system(command.c_str()) == 0);
    CHECK(xtask::eval::parse_results_csv(read_file(dir.file("env/results.csv"))).size() == 3);
}
