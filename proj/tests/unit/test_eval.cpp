#include <algorithm>
#include <filesystem>
#include <random>

#include <fmt/format.h>

#include "doctest.h"

#include "support/relabel_reference.hpp"
#include "support/tempdir.hpp"
#include "xtask/error.hpp"
#include "xtask/eval/export.hpp"
#include "xtask/eval/metrics.hpp"
#include "xtask/eval/relabel.hpp"
#include "xtask/eval/sources.hpp"
#include "xtask/eval/study.hpp"
#include "xtask/synth/synth.hpp"

using namespace xtask;
using namespace xtask::eval;

namespace {

constexpr Label L = Label::lrp;
constexpr Label N = Label::no_lrp;

using test::brute_force_relabel;

std::array<Label, 81> from_range_bits(std::uint32_t bits, Label outside = N) { return test::range_pattern(bits, outside); }

SplitResult result(std::string subject, char cond, std::string set, int test, double tpr, double tnr) {
    std::vector<int> train;
    for (int s = 1; s <= 3; ++s) {
        if (s != test) train.push_back(s);
    }
    return {std::move(subject), cond, std::move(set), train, test, tpr, tnr, 0.5 * (tpr + tnr)};
}

synth::SynthConfig tiny_config(const std::string& id, std::uint64_t seed) {
    synth::SynthConfig c;
    c.seed = seed;
    c.subject_id = id;
    c.trials_per_set = 6;
    c.snr = 2.0;
    return c;
}

onset::OnsetConfig synth_onsets() {
    onset::OnsetConfig o;
    o.release_delay_s = 0.02;
    return o;
}

}  // namespace

TEST_CASE("relabel: worked examples") {
    SUBCASE("all range predictions LRP: whole range LRP") {
        const auto t = relabel(from_range_bits(0x1FFFFF));
        for (int k = 0; k < 60; ++k) CHECK(t[k] == N);
        for (int k = 60; k <= 80; ++k) CHECK(t[k] == L);
    }
    SUBCASE("all range predictions NoLRP: only the fixed window is LRP") {
        const auto t = relabel(from_range_bits(0));
        for (int k = 0; k < 80; ++k) CHECK(t[k] == N);
        CHECK(t[80] == L);
    }
    SUBCASE("NoLRP through -1.60 s, LRP after: change point after window 68") {
        std::uint32_t bits = 0;
        for (int k = 69; k <= 80; ++k) bits |= 1u << (k - 60);
        const auto t = relabel(from_range_bits(bits));
        CHECK(preprocess::window_start(68) == doctest::Approx(-1.6));
        for (int k = 0; k <= 68; ++k) CHECK(t[k] == N);
        for (int k = 69; k <= 80; ++k) CHECK(t[k] == L);
    }
    SUBCASE("predictions before the range never matter") {
        CHECK(relabel(from_range_bits(0x1FFFFF, L)) == relabel(from_range_bits(0x1FFFFF, N)));
    }
    SUBCASE("the fixed window's prediction joins the scan only when enabled") {
        // Windows 78, 79, 80 NoLRP; 77 LRP.
        std::uint32_t bits = 0x1FFFFF & ~(7u << 18);
        const auto with = relabel(from_range_bits(bits), {true});
        const auto without = relabel(from_range_bits(bits), {false});
        CHECK(with[79] == N);
        CHECK(with[80] == L);
        CHECK(without[79] == L);
    }
    CHECK(kRangeFirst == 60);
    CHECK(preprocess::window_start(kRangeFirst) == doctest::Approx(-2.0));
    CHECK(preprocess::window_start(kRangeLast) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(relabel(std::vector<Label>(80, N)), Error);
}

TEST_CASE("property: relabel matches the brute-force reference on all 2^21 range patterns") {
    for (const bool scan_fixed : {true, false}) {
        std::size_t mismatches = 0, non_monotone = 0;
        for (std::uint32_t bits = 0; bits < (1u << 21); ++bits) {
            const auto p = from_range_bits(bits);
            const auto t = relabel(p, {scan_fixed});
            if (t != brute_force_relabel(p, scan_fixed)) ++mismatches;
            int transitions = 0;
            for (int k = 1; k < 81; ++k) {
                if (t[k] != t[k - 1]) ++transitions;
                if (t[k - 1] == L && t[k] == N) ++non_monotone;
            }
            if (transitions != 1 || t[59] != N || t[80] != L) ++non_monotone;
        }
        CAPTURE(scan_fixed);
        CHECK(mismatches == 0);
        CHECK(non_monotone == 0);
    }
}

TEST_CASE("balanced accuracy: definition and examples") {
    const std::vector<Label> truth{L, L, L, L, L, N, N, N, N, N, N, N, N, N, N};
    CHECK(balanced_accuracy(truth, truth).ba == 1.0);
    // TPR 4/5 = 0.8, TNR 9/10 = 0.9.
    const std::vector<Label> pred{L, L, L, L, N, N, N, N, N, N, N, N, N, N, L};
    const auto r = balanced_accuracy(pred, truth);
    CHECK(r.tpr == doctest::Approx(0.8));
    CHECK(r.tnr == doctest::Approx(0.9));
    CHECK(r.ba == doctest::Approx(0.85));
    CHECK(r.confusion == Confusion{4, 1, 9, 1});
    CHECK(r.ba == 0.5 * (r.tpr + r.tnr));
    try {
        balanced_accuracy(std::vector<Label>{L, N}, std::vector<Label>{N, N});
        FAIL("expected a metric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::metric);
    }
    CHECK_THROWS_AS(balanced_accuracy(std::vector<Label>{L}, std::vector<Label>{L, N}), Error);
}

TEST_CASE("balanced accuracy of random guesses is 0.5 +/- 0.02 (Monte Carlo)") {
    std::mt19937_64 rng(31);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Label> truth(10000), pred(10000);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            truth[i] = i % 2 ? L : N;
            pred[i] = coin(rng) ? L : N;
        }
        CHECK(std::abs(balanced_accuracy(pred, truth).ba - 0.5) <= 0.02);
    }
}

TEST_CASE("property: balanced accuracy is invariant to joint reordering") {
    std::mt19937_64 rng(32);
    std::bernoulli_distribution coin(0.4);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::pair<Label, Label>> pairs(200);
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {coin(rng) ? L : N, i % 3 ? N : L};
        const auto score = [&] {
            std::vector<Label> p, t;
            for (const auto& [a, b] : pairs) {
                p.push_back(a);
                t.push_back(b);
            }
            return balanced_accuracy(p, t);
        };
        const auto before = score();
        std::shuffle(pairs.begin(), pairs.end(), rng);
        const auto after = score();
        CHECK(before.confusion == after.confusion);
        CHECK(before.ba == after.ba);
    }
}

TEST_CASE("leave-one-set-out: three disjoint splits in test order") {
    const auto splits = leave_one_set_out({1, 2, 3});
    REQUIRE(splits.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(splits[i].test_set == static_cast<int>(i) + 1);
        CHECK(splits[i].train_sets.size() == 2);
        CHECK(std::find(splits[i].train_sets.begin(), splits[i].train_sets.end(), splits[i].test_set) ==
              splits[i].train_sets.end());
    }
    CHECK_THROWS_AS(leave_one_set_out({1, 2}), Error);
}

TEST_CASE("summaries: mean, sample SD and the imbalance flag") {
    std::vector<SplitResult> rs{result("s1", 'A', "custom-4", 1, 0.9, 0.5), result("s1", 'A', "custom-4", 2, 0.9, 0.6),
                                result("s2", 'A', "custom-4", 1, 0.7, 0.7), result("s1", 'B', "custom-4", 1, 0.6, 0.7)};
    const auto cells = summarize(rs);
    REQUIRE(cells.size() == 2);
    const auto& a = cells[0];
    CHECK(a.condition == 'A');
    CHECK(a.count == 3);
    CHECK(a.mean_ba == doctest::Approx((0.7 + 0.75 + 0.7) / 3));
    const double m = a.mean_ba;
    const double var = (std::pow(0.7 - m, 2) + std::pow(0.75 - m, 2) + std::pow(0.7 - m, 2)) / 2.0;
    CHECK(a.sd_ba == doctest::Approx(std::sqrt(var)));
    // |0.8333 - 0.6| > 0.2
    CHECK(a.imbalanced);
    CHECK_FALSE(cells[1].imbalanced);
    CHECK(cells[1].sd_ba == 0.0);
}

TEST_CASE("results CSV: schema, round trip and empty report") {
    std::vector<SplitResult> rs;
    for (int s = 1; s <= 8; ++s) {
        for (int t = 1; t <= 3; ++t) rs.push_back(result(fmt::format("sub{:02}", s), 'C', "standard-16", t, 0.1 * t + 0.01 * s, 1.0 / 3.0 * t / 1.1));
    }
    const auto csv = results_csv(rs);
    CHECK(csv.rfind("subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
    CHECK(csv.find(",C,standard-16,2;3,1,") != std::string::npos);
    const auto back = parse_results_csv(csv);
    CHECK(back == rs);
    const auto before = summarize(rs), after = summarize(back);
    REQUIRE(before.size() == 1);
    CHECK(after[0].mean_ba == before[0].mean_ba);
    CHECK(after[0].sd_ba == before[0].sd_ba);
    CHECK(before[0].count == 24);

    CHECK(results_csv({}) == "subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n");
    CHECK(parse_results_csv(results_csv({})).empty());
    CHECK_THROWS_AS(parse_results_csv("a,b\n"), ParseError);
    CHECK_THROWS_AS(parse_results_csv("subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\nx,A,c,1;2,3,0.5\n"),
                    ParseError);
}

TEST_CASE("export writes CSVs and one SVG per cell") {
    StudyReport report;
    report.results = {result("s1", 'A', "custom-4", 1, 0.8, 0.7), result("s1", 'B', "custom-8", 2, 0.6, 0.9)};
    test::TempDir dir;
    export_report(report, dir.path().string());
    CHECK(std::filesystem::exists(dir.file("results.csv")));
    CHECK(std::filesystem::exists(dir.file("summary.csv")));
    CHECK(cell_svg_name('A', "custom-4") == "A_custom-4.svg");
    CHECK(std::filesystem::exists(dir.file("A_custom-4.svg")));
    CHECK(std::filesystem::exists(dir.file("B_custom-8.svg")));
    CHECK(test::read_file(dir.file("A_custom-4.svg")).find("<svg") != std::string::npos);
    const auto summary = test::read_file(dir.file("summary.csv"));
    CHECK(summary.find("imbalanced") != std::string::npos);

    test::TempDir plain;
    export_report(StudyReport{}, plain.path().string(), false);
    CHECK(test::read_file(plain.file("results.csv")) == "subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n");
    CHECK_FALSE(std::filesystem::exists(plain.file("A_custom-4.svg")));
}

TEST_CASE("sort order is condition, channel set, subject, test set") {
    std::vector<SplitResult> rs{result("b", 'B', "x", 1, 0.5, 0.5), result("a", 'A', "y", 2, 0.5, 0.5),
                                result("a", 'A', "y", 1, 0.5, 0.5), result("c", 'A', "x", 3, 0.5, 0.5)};
    sort_results(rs);
    CHECK(rs[0].channel_set == "x");
    CHECK(rs[1].test_set == 1);
    CHECK(rs[2].test_set == 2);
    CHECK(rs[3].condition == 'B');
}

TEST_CASE("study on synthetic subjects: split integrity, counts and determinism") {
    const auto subject = synthetic_subject(tiny_config("syn01", 4), synth_onsets());
    REQUIRE(subject.set_indices(Movement::unilateral) == std::vector<int>{1, 2, 3});
    REQUIRE(subject.set_indices(Movement::bilateral) == std::vector<int>{1, 2, 3});
    for (const auto& set : subject.sets) {
        for (const auto& trial : set.trials) {
            CHECK(trial.trial.movement == set.movement);
            CHECK(trial.trial.set_index == set.set_index);
            CHECK(trial.windows.size() == 81);
        }
    }

    const auto c4 = make_channel_set("custom-4");
    const auto train = build_training_set(subject, Movement::bilateral, {1, 2}, c4);
    const auto expected = 5 * (subject.get(Movement::bilateral, 1).trials.size() + subject.get(Movement::bilateral, 2).trials.size());
    CHECK(train.windows.size() == expected);
    CHECK(train.windows.front().rows() == 4);

    StudyOptions options;
    options.conditions = {'C'};
    options.channel_sets = {"custom-4"};
    const auto results = run_condition(subject, study_condition('C'), c4, options);
    REQUIRE(results.size() == 3);
    for (const auto& r : results) {
        CHECK(r.condition == 'C');
        CHECK(std::find(r.train_sets.begin(), r.train_sets.end(), r.test_set) == r.train_sets.end());
        CHECK(r.ba == 0.5 * (r.tpr + r.tnr));
    }

    // Predictions for condition C come only from the unilateral held-out set.
    const auto model = model::fit_pipeline(train, c4);
    const auto preds = predict_set(model, subject.get(Movement::unilateral, 3), options.relabel);
    for (const auto& p : preds) {
        CHECK(p.trial.movement == Movement::unilateral);
        CHECK(p.trial.set_index == 3);
        CHECK(p.truth[80] == Label::lrp);
        CHECK(p.truth[0] == Label::no_lrp);
        for (int k = 0; k < 81; ++k) CHECK(p.predicted[k] == model::label_from_probability(p.probability[k]));
    }

    // Eight copies under distinct ids: 24 results in the cell.
    options.conditions = {'A'};
    const auto load = [&](std::size_t i) {
        auto s = subject;
        s.subject = fmt::format("syn{:02}", i + 1);
        return s;
    };
    const auto report = run_study(8, load, options);
    const auto cells = report.cells();
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].count == 24);
    const auto again = run_study(8, load, options);
    CHECK(results_csv(again.results) == results_csv(report.results));
}

TEST_CASE("cache sources: grouping by subject and directory listing") {
    test::TempDir dir;
    CHECK(list_caches(dir.path().string()).empty());
    test::write_file(dir.file("notes.txt"), "x");
    CHECK(list_caches(dir.path().string()).empty());
    CHECK_THROWS_AS(list_caches(dir.file("missing")), Error);
    CHECK(group_by_subject({}).empty());
}
