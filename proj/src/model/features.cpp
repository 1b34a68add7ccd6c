#include "xtask/model/features.hpp"

#include <cmath>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::model {

Eigen::VectorXd extract_features(const Eigen::MatrixXd& pseudo_window, int tail) {
    if (tail <= 0 || pseudo_window.cols() < tail || pseudo_window.rows() == 0) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("pseudo-window of shape {}x{} has no {}-sample tail", pseudo_window.rows(),
                                pseudo_window.cols(), tail));
    }
    Eigen::VectorXd out(pseudo_window.rows() * tail);
    for (Eigen::Index c = 0; c < pseudo_window.rows(); ++c) {
        out.segment(c * tail, tail) = pseudo_window.row(c).tail(tail).transpose();
    }
    return out;
}

Eigen::VectorXd FeatureNormalizer::apply(const Eigen::VectorXd& features) const {
    if (features.size() != mean.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("{} features given, normalizer fit on {}", features.size(), mean.size()));
    }
    return (features - mean).cwiseQuotient(sd);
}

Eigen::MatrixXd FeatureNormalizer::apply_rows(const Eigen::MatrixXd& features) const {
    if (features.cols() != mean.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("{} features given, normalizer fit on {}", features.cols(), mean.size()));
    }
    return (features.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

FeatureNormalizer fit_normalizer(const Eigen::MatrixXd& features) {
    if (features.rows() < 2) throw Error(ErrorKind::fit, "normalizer needs >= 2 training vectors");
    FeatureNormalizer n;
    n.mean = features.colwise().mean().transpose();
    n.sd.resize(features.cols());
    n.degenerate.assign(static_cast<std::size_t>(features.cols()), false);
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const double var = (features.col(j).array() - n.mean(j)).square().mean();
        const double sd = std::sqrt(var);
        // Relative test: round-off on a constant column leaves a tiny variance.
        if (!(sd > 1e-12 * std::max(1.0, std::abs(n.mean(j))))) {
            n.sd(j) = 1.0;
            n.degenerate[static_cast<std::size_t>(j)] = true;
        } else {
            n.sd(j) = sd;
        }
    }
    return n;
}

Eigen::MatrixXd FeatureStage::raw_features(std::span<const SignalMatrix> windows) const {
    const auto width = xdawn.filters.cols() * kTailSamples;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(windows.size()), width);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = extract_features(apply_xdawn(xdawn, windows[i])).transpose();
    }
    return out;
}

Eigen::MatrixXd FeatureStage::features(std::span<const SignalMatrix> windows) const {
    return normalizer.apply_rows(raw_features(windows));
}

Eigen::VectorXd FeatureStage::features(const SignalMatrix& window) const {
    return normalizer.apply(extract_features(apply_xdawn(xdawn, window)));
}

FeatureStage fit_feature_stage(std::span<const SignalMatrix> windows, std::span<const Label> labels,
                               std::vector<std::string> channels) {
    FeatureStage stage;
    stage.xdawn = fit_xdawn(windows, labels, std::move(channels));
    stage.normalizer = fit_normalizer(stage.raw_features(windows));
    return stage;
}

}  // namespace xtask::model
