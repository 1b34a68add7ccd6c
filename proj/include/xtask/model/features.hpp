#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xtask/model/xdawn.hpp"

namespace xtask::model {

inline constexpr int kTailSamples = 4;
inline constexpr int kFeatureCount = 16;

/// The last 4 samples of each pseudo-channel, channel-major.
Eigen::VectorXd extract_features(const Eigen::MatrixXd& pseudo_window, int tail = kTailSamples);

/// Per-feature z-scoring with training statistics. Constant features keep
/// SD 1 and are flagged.
struct FeatureNormalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<bool> degenerate;

    Eigen::VectorXd apply(const Eigen::VectorXd& features) const;
    /// Row-wise on an instances x features matrix.
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& features) const;

    bool operator==(const FeatureNormalizer&) const = default;
};

/// `features` holds one instance per row.
FeatureNormalizer fit_normalizer(const Eigen::MatrixXd& features);

/// xDAWN, tail features and normalisation fit together on one training set.
struct FeatureStage {
    SpatialFilterModel xdawn;
    FeatureNormalizer normalizer;

    /// Raw (unnormalised) features, one row per window.
    Eigen::MatrixXd raw_features(std::span<const SignalMatrix> windows) const;
    Eigen::MatrixXd features(std::span<const SignalMatrix> windows) const;
    Eigen::VectorXd features(const SignalMatrix& window) const;
};

FeatureStage fit_feature_stage(std::span<const SignalMatrix> windows, std::span<const Label> labels,
                               std::vector<std::string> channels);

}  // namespace xtask::model
