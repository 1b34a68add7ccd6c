#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "doctest.h"

#include "xtask/core/channels.hpp"
#include "xtask/error.hpp"
#include "xtask/ingest/session.hpp"
#include "xtask/onset/onset.hpp"
#include "xtask/synth/synth.hpp"

using namespace xtask;
using namespace xtask::synth;

namespace {

std::size_t row_of(const RawRecording& rec, const std::string& name) {
    const auto r = rec.channel_index(name);
    REQUIRE(r.has_value());
    return *r;
}

double correlation(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    const Eigen::RowVectorXd x = a.array() - a.mean();
    const Eigen::RowVectorXd y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// Least-squares fit of c + a * max(0, t - s) on t in [-2, 0) s; returns the best s.
double fit_ramp_start(const Eigen::VectorXd& average, double rate) {
    const auto n = average.size();
    double best_s = 0.0, best_sse = 1e300;
    for (int step = 0; step < 400; ++step) {
        const double s = -2.0 + 0.005 * step;
        Eigen::MatrixXd design(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = -2.0 + static_cast<double>(i) / rate;
            design(i, 0) = 1.0;
            design(i, 1) = std::max(0.0, t - s);
        }
        const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(average);
        const double sse = (average - design * coef).squaredNorm();
        if (sse < best_sse) {
            best_sse = sse;
            best_s = s;
        }
    }
    return best_s;
}

}  // namespace

TEST_CASE("minimum jerk: boundaries, midpoint and flat ends") {
    CHECK(minimum_jerk(300.0, 0.6, 0.0) == 0.0);
    CHECK(minimum_jerk(300.0, 0.6, 0.6) == doctest::Approx(300.0).epsilon(1e-15));
    CHECK(minimum_jerk(300.0, 0.6, 0.3) == doctest::Approx(150.0).epsilon(1e-15));
    CHECK(minimum_jerk(300.0, 0.6, -1.0) == 0.0);
    CHECK(minimum_jerk(300.0, 0.6, 2.0) == 300.0);
    // Cubic contact at both ends: zero velocity and acceleration.
    for (const double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double tau = h / 0.6;
        CHECK(minimum_jerk(300.0, 0.6, h) / (tau * tau * tau) == doctest::Approx(3000.0).epsilon(2 * 15 * tau / 10 + 1e-6));
        CHECK((300.0 - minimum_jerk(300.0, 0.6, 0.6 - h)) / (tau * tau * tau) ==
              doctest::Approx(3000.0).epsilon(2 * 15 * tau / 10 + 1e-6));
    }
    // Velocity from the analytic derivative.
    const auto velocity = [](double tau) { return 300.0 / 0.6 * (30 * tau * tau - 60 * tau * tau * tau + 30 * std::pow(tau, 4)); };
    CHECK(std::abs(velocity(0.0)) <= 1e-12);
    CHECK(std::abs(velocity(1.0)) <= 1e-12);
    for (int i = 1; i < 100; ++i) {
        const double tau = i / 100.0;
        const double h = 1e-6;
        const double numeric = (minimum_jerk(300.0, 0.6, 0.6 * tau + h) - minimum_jerk(300.0, 0.6, 0.6 * tau - h)) / (2 * h);
        CHECK(numeric == doctest::Approx(velocity(tau)).epsilon(1e-6));
        CHECK(minimum_jerk(300.0, 0.6, 0.6 * tau) + minimum_jerk(300.0, 0.6, 0.6 * (1 - tau)) ==
              doctest::Approx(300.0).epsilon(1e-12));
    }
    const auto trace = minimum_jerk_trace(300.0, 0.6, 500.0);
    REQUIRE(trace.size() == 301);
    CHECK(trace.front() == 0.0);
    CHECK(trace.back() == doctest::Approx(300.0));
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
}

TEST_CASE("topography: unilateral is left-only, bilateral is mirror symmetric") {
    const SynthConfig config;
    const auto uni = topography(Movement::unilateral, config);
    const auto bi = topography(Movement::bilateral, config);
    const auto names = cap_vocabulary();
    REQUIRE(uni.size() == names.size());
    double peak = 0.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string n(names[i]);
        if (hemisphere(n) == Hemisphere::right) CHECK(uni[i] == 0.0);
        if (uni[i] > peak) {
            peak = uni[i];
            at = i;
        }
        const auto mirror = mirror_channel(n);
        const auto j = static_cast<std::size_t>(std::find(names.begin(), names.end(), mirror) - names.begin());
        CHECK(std::abs(bi[i] - bi[j]) <= 1e-12);
    }
    CHECK(peak == doctest::Approx(1.0));
    const std::string focus(names[at]);
    CHECK((focus == "C1" || focus == "C3"));
    const auto idx = [&](const char* n) { return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin()); };
    CHECK(uni[idx("C2")] <= 0.05 * uni[idx("C1")]);
    CHECK(uni[idx("C3")] > uni[idx("P7")]);
    CHECK(bi[idx("C4")] == doctest::Approx(bi[idx("C3")]));
}

TEST_CASE("generate_session is deterministic and streams differ") {
    SynthConfig c;
    c.trials_per_set = 3;
    c.seed = 9;
    const auto a = generate_session(c, 1);
    const auto b = generate_session(c, 1);
    CHECK(a.session == b.session);
    CHECK(a.truth == b.truth);
    const auto other_set = generate_session(c, 2);
    CHECK(other_set.session.eeg.data() != a.session.eeg.data());
    c.subject_id = "sub02";
    CHECK(generate_session(c, 1).session.eeg.data() != a.session.eeg.data());
    c.subject_id = "sub01";
    c.seed = 10;
    CHECK(generate_session(c, 1).session.eeg.data() != a.session.eeg.data());
}

TEST_CASE("session layout: 64 channels, markers, rests and the release delay") {
    SynthConfig c;
    c.trials_per_set = 8;
    c.seed = 3;
    const auto s = generate_session(c, 2);
    const auto& session = s.session;
    CHECK(session.eeg.channel_count() == 64);
    CHECK(session.eeg.rate() == 500.0);
    CHECK(session.set_index == 2);
    CHECK(session.subject_id == "sub01");
    REQUIRE(session.trials.size() == 8);
    REQUIRE(s.truth.onset_samples.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) {
        const auto& trial = session.trials[t];
        CHECK(trial.valid);
        CHECK(trial.rest_duration >= 5.5 - 1e-9);
        CHECK(trial.rest_duration <= 8.0 + 0.02 + 1e-9);
        CHECK(s.truth.lrp_start_samples[t] < s.truth.onset_samples[t]);
        CHECK(s.truth.onset_samples[t] - s.truth.lrp_start_samples[t] == 600);
        CHECK(s.truth.release_samples[t] == s.truth.onset_samples[t] + 10);
        CHECK(trial.release_sample == s.truth.release_samples[t]);
        CHECK_FALSE(trial.onset_sample.has_value());
    }
    // The ingest segmenter applied to the synthetic session finds the same trials.
    const auto rebuilt = ingest::build_trials(session, c.codes);
    CHECK(rebuilt == session.trials);
}

TEST_CASE("motion: resting jitter below 0.1 mm and reach starts at the onset") {
    SynthConfig c;
    c.trials_per_set = 4;
    c.seed = 5;
    const auto s = generate_session(c, 1);
    const auto& session = s.session;
    const auto hand = session.motion.marker_index("right_hand");
    REQUIRE(hand.has_value());
    const auto& pos = session.motion.positions[*hand];
    for (std::size_t t = 0; t < 4; ++t) {
        const auto onset = s.truth.onset_samples[t] - session.motion_offset;
        const Eigen::RowVectorXd rest = pos.row(static_cast<Eigen::Index>(onset - 250));
        for (std::size_t m = onset - 250; m <= onset; ++m) {
            CHECK((pos.row(static_cast<Eigen::Index>(m)) - rest).norm() < 0.1 * std::sqrt(3.0));
        }
        // Half the reach is covered half-way through it.
        const double half = (pos.row(static_cast<Eigen::Index>(onset + 150)) - pos.row(static_cast<Eigen::Index>(onset))).norm();
        CHECK(half == doctest::Approx(150.0).epsilon(0.01));
    }
    // The onset detector recovers the planted onsets exactly.
    onset::OnsetConfig oc;
    oc.release_delay_s = c.release_delay;
    auto labelled = session;
    onset::label_onsets(labelled, oc);
    for (std::size_t t = 0; t < 4; ++t) {
        REQUIRE(labelled.trials[t].onset_sample.has_value());
        CHECK(*labelled.trials[t].onset_sample == s.truth.onset_samples[t]);
    }
}

TEST_CASE("background noise: unit variance and neighbour correlation near 0.5") {
    SynthConfig c;
    c.seed = 12;
    const auto noise = background_noise(c, 60000, 1.0, 7);
    const auto names = cap_vocabulary();
    REQUIRE(noise.rows() == 64);
    const auto idx = [&](const char* n) { return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), n) - names.begin()); };
    for (Eigen::Index r = 0; r < noise.rows(); ++r) {
        const Eigen::RowVectorXd row = noise.row(r);
        const double var = (row.array() - row.mean()).square().mean();
        CHECK(var == doctest::Approx(1.0).epsilon(0.1));
    }
    for (const auto& [a, b] : {std::pair{"C1", "C3"}, std::pair{"Cz", "C1"}, std::pair{"FC1", "C1"}, std::pair{"CP2", "C2"}}) {
        const double rho = correlation(noise.row(idx(a)), noise.row(idx(b)));
        CAPTURE(a);
        CAPTURE(b);
        CHECK(rho == doctest::Approx(0.5).epsilon(0.2));
    }
    CHECK(std::abs(correlation(noise.row(idx("Fp1")), noise.row(idx("O2")))) < 0.1);
    CHECK(background_noise(c, 1000, 2.0, 7) == background_noise(c, 1000, 2.0, 7));
}

TEST_CASE("planted LRP start is recoverable within 50 ms by template regression") {
    // 120 trials: three sets of 40.
    for (const std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        SynthConfig c;
        c.seed = seed;
        c.trials_per_set = 40;
        c.snr = 1.0;
        const Eigen::Index span = 1000;  // [-2, 0) s
        Eigen::VectorXd average = Eigen::VectorXd::Zero(span);
        std::size_t trials = 0;
        for (int set = 1; set <= 3; ++set) {
            const auto s = generate_session(c, set);
            const auto& eeg = s.session.eeg;
            // Topography-weighted channel average, the planted source estimate.
            Eigen::VectorXd weights(eeg.channel_count());
            for (std::size_t i = 0; i < eeg.channel_count(); ++i) {
                const auto at = std::find(s.truth.channels.begin(), s.truth.channels.end(), eeg.channel_names()[i]);
                weights(static_cast<Eigen::Index>(i)) = s.truth.topography[static_cast<std::size_t>(at - s.truth.channels.begin())];
            }
            weights /= weights.squaredNorm();
            for (const auto onset : s.truth.onset_samples) {
                const auto block = eeg.data().middleCols(static_cast<Eigen::Index>(onset) - span, span);
                average += (weights.transpose() * block).transpose();
                ++trials;
            }
        }
        average /= static_cast<double>(trials);
        const double start = fit_ramp_start(average, c.rate);
        CAPTURE(seed);
        CAPTURE(start);
        CHECK(std::abs(start + c.lrp_onset_lead) <= 0.05);
    }
}

TEST_CASE("config validation") {
    SynthConfig c;
    CHECK_NOTHROW(c.validate());
    c.snr = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.lrp_onset_lead = 2.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.lrp_onset_lead = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.trials_per_set = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.rest_min = 9.0;
    CHECK_THROWS_AS(c.validate(), Error);

    const auto parsed = SynthConfig::from_config(KeyValueConfig::parse("synth.snr = 0.25\nsynth.seed = 7\nsynth.movement = bilateral\n"));
    CHECK(parsed.snr == 0.25);
    CHECK(parsed.seed == 7);
    CHECK(parsed.movement == Movement::bilateral);
}
