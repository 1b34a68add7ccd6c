#include "xtask/synth/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/ingest/container.hpp"

namespace xtask::synth {

void SynthConfig::validate() const {
    const auto fail = [](std::string msg) { throw Error(ErrorKind::invalid_argument, std::move(msg)); };
    if (!(snr > 0.0)) fail(fmt::format("snr must be > 0, got {}", snr));
    if (!(lrp_onset_lead > 0.0 && lrp_onset_lead < 2.0)) fail(fmt::format("lrp_onset_lead must lie in (0, 2), got {}", lrp_onset_lead));
    if (trials_per_set < 1) fail("trials_per_set must be >= 1");
    if (sets < 1) fail("sets must be >= 1");
    if (!(rate > 0.0)) fail("rate must be positive");
    if (!(white_fraction >= 0.0 && white_fraction <= 1.0)) fail("white_fraction must lie in [0, 1]");
    if (white_fraction < 1.0 && pink_corners_hz.empty()) fail("1/f noise needs at least one corner");
    for (const double c : pink_corners_hz) {
        if (!(c > 0.0 && c < rate / 2.0)) fail(fmt::format("corner {} Hz outside (0, Nyquist)", c));
    }
    if (!(spatial_length > 0.0) || !(topography_width > 0.0)) fail("spatial lengths must be positive");
    if (!(rest_min >= 1.0 && rest_max >= rest_min)) fail("rest interval must satisfy 1 <= rest_min <= rest_max");
    if (!(release_delay >= 0.0) || !(reach_s > 0.0) || !(return_s > 0.0) || !(hold_s >= 0.0)) fail("invalid timing");
    if (!(lrp_return >= 0.0)) fail("lrp_return must be >= 0");
    if (!(jitter_mm >= 0.0)) fail("jitter must be >= 0");
}

SynthConfig SynthConfig::from_config(const KeyValueConfig& c) {
    SynthConfig s;
    s.seed = static_cast<std::uint64_t>(c.get_int("synth.seed", static_cast<long long>(s.seed)));
    s.subject_id = c.get_or("synth.subject", s.subject_id);
    s.trials_per_set = static_cast<int>(c.get_int("synth.trials_per_set", s.trials_per_set));
    s.sets = static_cast<int>(c.get_int("synth.sets", s.sets));
    s.movement = parse_movement(c.get_or("synth.movement", std::string(to_string(s.movement))));
    s.snr = c.get_double("synth.snr", s.snr);
    s.lrp_onset_lead = c.get_double("synth.lrp_onset_lead", s.lrp_onset_lead);
    s.lrp_peak = c.get_double("synth.lrp_peak", s.lrp_peak);
    s.white_fraction = c.get_double("synth.white_fraction", s.white_fraction);
    s.topography_width = c.get_double("synth.topography_width", s.topography_width);
    s.jitter_mm = c.get_double("synth.jitter_mm", s.jitter_mm);
    s.release_delay = c.get_double("synth.release_delay", s.release_delay);
    s.codes = ingest::MarkerCodes::from_config(c);
    s.validate();
    return s;
}

double minimum_jerk(double distance, double duration, double t) {
    const double tau = std::clamp(t / duration, 0.0, 1.0);
    const double t3 = tau * tau * tau;
    return distance * t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

std::vector<double> minimum_jerk_trace(double distance, double duration, double rate) {
    if (!(distance > 0.0) || !(duration > 0.0) || !(rate > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "minimum-jerk arguments must be positive");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = minimum_jerk(distance, duration, static_cast<double>(i) / rate);
    return out;
}

std::vector<double> topography(Movement movement, const SynthConfig& config) {
    const auto vocab = cap_vocabulary();
    std::vector<double> w(vocab.size(), 0.0);
    const double s2 = 2.0 * config.topography_width * config.topography_width;
    const auto bump = [&](ScalpPosition p, ScalpPosition f) {
        const double dx = p.x - f.x, dy = p.y - f.y;
        return std::exp(-(dx * dx + dy * dy) / s2);
    };
    const ScalpPosition mirror{-config.focus.x, config.focus.y};
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto p = scalp_position(vocab[i]);
        if (movement == Movement::bilateral) {
            w[i] = bump(p, config.focus) + bump(p, mirror);
        } else if (hemisphere(vocab[i]) != Hemisphere::right) {
            w[i] = bump(p, config.focus);
        }
    }
    const double peak = *std::max_element(w.begin(), w.end());
    for (auto& v : w) v /= peak;
    return w;
}

namespace {

std::mt19937_64 make_rng(const SynthConfig& config, std::uint64_t stream, std::uint32_t purpose) {
    const auto subject = ingest::crc32_of(config.subject_id);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), subject,
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), purpose};
    return std::mt19937_64(seq);
}

// Lower Cholesky factor of the scalp-distance Gaussian kernel.
Eigen::MatrixXd spatial_mixing(const SynthConfig& config) {
    const auto vocab = cap_vocabulary();
    const auto n = static_cast<Eigen::Index>(vocab.size());
    Eigen::MatrixXd k(n, n);
    const double l2 = 2.0 * config.spatial_length * config.spatial_length;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = scalp_distance(vocab[static_cast<std::size_t>(i)], vocab[static_cast<std::size_t>(j)]);
            k(i, j) = std::exp(-d * d / l2);
        }
    }
    for (double jitter = 0.0; jitter < 1e-2; jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        kj /= 1.0 + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kj);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw Error(ErrorKind::invalid_argument, "spatial noise kernel is not positive definite");
}

}  // namespace

SignalMatrix background_noise(const SynthConfig& config, std::size_t samples, double sd, std::uint64_t stream) {
    const auto channels = static_cast<Eigen::Index>(cap_vocabulary().size());
    const auto n = static_cast<Eigen::Index>(samples);
    auto rng = make_rng(config, stream, 1);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Parallel one-pole low-passes driven by one white sequence, gains
    // corner^-1/2: PSD close to 1/f between the outer corners.
    std::vector<double> pole, gain;
    for (const double fc : config.pink_corners_hz) {
        pole.push_back(std::exp(-2.0 * std::numbers::pi * fc / config.rate));
        gain.push_back(1.0 / std::sqrt(fc));
    }
    double pink_var = 0.0;
    for (std::size_t i = 0; i < pole.size(); ++i) {
        for (std::size_t k = 0; k < pole.size(); ++k) {
            pink_var += gain[i] * gain[k] * (1.0 - pole[i]) * (1.0 - pole[k]) / (1.0 - pole[i] * pole[k]);
        }
    }
    const double white_gain = std::sqrt(config.white_fraction);
    const double pink_gain = pole.empty() ? 0.0 : std::sqrt((1.0 - config.white_fraction) / pink_var);

    SignalMatrix z(channels, n);
    std::vector<double> state(pole.size());
    // Ten time constants of the slowest pole bring the bank to stationarity.
    const auto burn_in = pole.empty() ? Eigen::Index{0}
                                      : static_cast<Eigen::Index>(std::ceil(
                                            10.0 * config.rate /
                                            (2.0 * std::numbers::pi *
                                             *std::min_element(config.pink_corners_hz.begin(), config.pink_corners_hz.end()))));
    for (Eigen::Index c = 0; c < channels; ++c) {
        std::fill(state.begin(), state.end(), 0.0);
        double* row = z.row(c).data();
        for (Eigen::Index t = -burn_in; t < n; ++t) {
            const double drive = normal(rng);
            double pink = 0.0;
            for (std::size_t i = 0; i < pole.size(); ++i) {
                state[i] = pole[i] * state[i] + (1.0 - pole[i]) * drive;
                pink += gain[i] * state[i];
            }
            if (t >= 0) row[t] = pink_gain * pink;
        }
        for (Eigen::Index t = 0; t < n; ++t) row[t] += white_gain * normal(rng);
    }
    const Eigen::MatrixXd mixing = spatial_mixing(config) * sd;
    SignalMatrix out(channels, n);
    out.noalias() = mixing * z;
    return out;
}

SynthSession generate_session(const SynthConfig& config, int set_index) {
    config.validate();
    const double rate = config.rate;
    const auto samples_of = [&](double seconds) { return static_cast<std::size_t>(std::llround(seconds * rate)); };
    const std::uint64_t stream = (static_cast<std::uint64_t>(config.movement == Movement::bilateral) << 32) |
                                 static_cast<std::uint32_t>(set_index);
    auto timing_rng = make_rng(config, stream, 2);
    auto jitter_rng = make_rng(config, stream, 3);
    std::uniform_real_distribution<double> rest_dist(config.rest_min, config.rest_max);
    std::uniform_real_distribution<double> jitter(-config.jitter_mm, config.jitter_mm);

    // Timeline on the EEG clock.
    const std::size_t motion_start = samples_of(config.lead_in_s);
    const std::size_t release_delay = samples_of(config.release_delay);
    const std::size_t movement_span =
        samples_of(config.reach_s + config.hold_s + config.return_s + config.press_after_return_s);
    std::vector<Marker> markers{{motion_start, config.codes.motion_start}, {motion_start, config.codes.switch_press}};
    GroundTruthRecord truth;
    std::size_t press = motion_start;
    for (int t = 0; t < config.trials_per_set; ++t) {
        const std::size_t onset = press + samples_of(rest_dist(timing_rng));
        const std::size_t release = onset + release_delay;
        truth.onset_samples.push_back(onset);
        truth.release_samples.push_back(release);
        truth.lrp_start_samples.push_back(onset - samples_of(config.lrp_onset_lead));
        markers.push_back({release, config.codes.switch_release});
        press = onset + movement_span;
        markers.push_back({press, config.codes.switch_press});
    }
    const std::size_t motion_stop = press + samples_of(config.tail_s);
    if (!config.codes.motion_stop.empty()) markers.push_back({motion_stop, config.codes.motion_stop});
    const std::size_t total = motion_stop + samples_of(config.tail_s);
    std::stable_sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) { return a.sample < b.sample; });

    // EEG: noise plus the planted ramp on the topography.
    const auto vocab = cap_vocabulary();
    truth.channels.assign(vocab.begin(), vocab.end());
    truth.topography = topography(config.movement, config);
    SignalMatrix eeg = background_noise(config, total, std::abs(config.lrp_peak) / config.snr, stream);
    std::vector<double> lrp(total, 0.0);
    const std::size_t back = samples_of(config.lrp_return);
    for (std::size_t t = 0; t < truth.onset_samples.size(); ++t) {
        const auto onset = truth.onset_samples[t];
        const auto start = truth.lrp_start_samples[t];
        for (std::size_t n = start; n <= onset; ++n) {
            lrp[n] += config.lrp_peak * static_cast<double>(n - start) / static_cast<double>(onset - start);
        }
        for (std::size_t n = 1; n < back && onset + n < total; ++n) {
            lrp[onset + n] += config.lrp_peak * (1.0 - static_cast<double>(n) / static_cast<double>(back));
        }
    }
    const Eigen::Map<const Eigen::RowVectorXd> ramp(lrp.data(), static_cast<Eigen::Index>(total));
    for (std::size_t c = 0; c < vocab.size(); ++c) {
        if (truth.topography[c] != 0.0) eeg.row(static_cast<Eigen::Index>(c)) += truth.topography[c] * ramp;
    }

    // Motion: both hands rest; the moving hand(s) follow the reach profile.
    const std::size_t motion_len = motion_stop - motion_start;
    const std::array<Eigen::RowVector3d, 2> rest{Eigen::RowVector3d(250.0, -150.0, 0.0),
                                                 Eigen::RowVector3d(250.0, 150.0, 0.0)};
    const std::array<Eigen::RowVector3d, 2> direction{Eigen::RowVector3d(1.0, 0.0, 0.0),
                                                      Eigen::RowVector3d(1.0, 0.0, 0.0)};
    const std::array<bool, 2> moves{config.movement == Movement::bilateral, true};
    ingest::MotionTrace motion;
    motion.rate = rate;
    motion.marker_names = {"left_hand", "right_hand"};
    for (int h = 0; h < 2; ++h) {
        ingest::PositionMatrix p(static_cast<Eigen::Index>(motion_len), 3);
        p.rowwise() = rest[static_cast<std::size_t>(h)];
        motion.positions.push_back(std::move(p));
    }
    const auto reach = minimum_jerk_trace(config.reach_mm, config.reach_s, rate);
    const auto hold = samples_of(config.hold_s);
    for (const auto onset : truth.onset_samples) {
        const auto begin = onset - motion_start;
        std::vector<double> profile(reach.begin(), reach.end());
        profile.insert(profile.end(), hold, reach.back());
        for (auto it = reach.rbegin(); it != reach.rend(); ++it) profile.push_back(*it);
        for (int h = 0; h < 2; ++h) {
            if (!moves[static_cast<std::size_t>(h)]) continue;
            auto& p = motion.positions[static_cast<std::size_t>(h)];
            for (std::size_t i = 0; i < profile.size() && begin + i < motion_len; ++i) {
                p.row(static_cast<Eigen::Index>(begin + i)) =
                    rest[static_cast<std::size_t>(h)] + profile[i] * direction[static_cast<std::size_t>(h)];
            }
        }
    }
    for (auto& p : motion.positions) {
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            for (Eigen::Index a = 0; a < 3; ++a) p(i, a) += jitter(jitter_rng);
        }
    }

    RawRecording rec(std::move(eeg), rate, truth.channels, std::move(markers));
    SynthSession out;
    out.session = ingest::synchronize(std::move(rec), std::move(motion), config.codes);
    out.session.subject_id = config.subject_id;
    out.session.task = config.movement;
    out.session.set_index = set_index;
    out.session.trials = ingest::build_trials(out.session, config.codes);
    out.truth = std::move(truth);
    return out;
}

}  // namespace xtask::synth
