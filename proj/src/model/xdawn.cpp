#include "xtask/model/xdawn.hpp"

#include <algorithm>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::model {

namespace {

void add_ridge(Eigen::MatrixXd& cov) {
    const auto n = static_cast<double>(cov.rows());
    const double ridge = 1e-6 * cov.trace() / n;
    cov.diagonal().array() += ridge;
}

}  // namespace

SpatialFilterModel fit_xdawn(std::span<const SignalMatrix> windows, std::span<const Label> labels,
                             std::vector<std::string> channels, int pseudo_channels) {
    if (windows.size() != labels.size()) throw Error(ErrorKind::invalid_argument, "windows and labels differ in length");
    if (windows.empty()) throw Error(ErrorKind::fit, "no training windows");
    const auto c = windows.front().rows();
    const auto t = windows.front().cols();
    if (!channels.empty() && static_cast<Eigen::Index>(channels.size()) != c) {
        throw Error(ErrorKind::invalid_argument, "channel names do not match window rows");
    }

    Eigen::MatrixXd evoked = Eigen::MatrixXd::Zero(c, t);
    Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(c, c);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        if (w.rows() != c || w.cols() != t) throw Error(ErrorKind::invalid_argument, "training windows differ in shape");
        sx.selfadjointView<Eigen::Lower>().rankUpdate(Eigen::MatrixXd(w));
        if (labels[i] == Label::lrp) {
            evoked += w;
            ++positives;
        }
    }
    if (positives < 2) throw Error(ErrorKind::fit, fmt::format("xDAWN needs >= 2 LRP windows, got {}", positives));
    evoked /= static_cast<double>(positives);
    sx = sx.selfadjointView<Eigen::Lower>();
    sx /= static_cast<double>(windows.size()) * static_cast<double>(t);
    Eigen::MatrixXd ss = evoked * evoked.transpose() / static_cast<double>(t);
    add_ridge(sx);
    add_ridge(ss);

    Eigen::LLT<Eigen::MatrixXd> chol(sx);
    if (chol.info() != Eigen::Success) {
        sx.diagonal().array() += 1e-3 * sx.trace() / static_cast<double>(c);
        chol.compute(sx);
        if (chol.info() != Eigen::Success) throw Error(ErrorKind::fit, "xDAWN covariance is singular");
    }
    // With Sx = L L', solve (L^-1 Ss L^-T) u = lambda u and map back v = L^-T u.
    const Eigen::MatrixXd l_inv = chol.matrixL().solve(Eigen::MatrixXd::Identity(c, c));
    const Eigen::MatrixXd whitened = l_inv * ss * l_inv.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (whitened + whitened.transpose()));
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::fit, "xDAWN eigendecomposition failed");

    const auto keep = std::min<Eigen::Index>(pseudo_channels, c);
    SpatialFilterModel model;
    model.channels = std::move(channels);
    model.filters.resize(c, keep);
    for (Eigen::Index f = 0; f < keep; ++f) {
        // Eigenvalues ascend.
        Eigen::VectorXd v = l_inv.transpose() * eig.eigenvectors().col(c - 1 - f);
        Eigen::Index at = 0;
        v.cwiseAbs().maxCoeff(&at);
        if (v(at) < 0.0) v = -v;
        model.filters.col(f) = v;
    }
    return model;
}

Eigen::MatrixXd apply_xdawn(const SpatialFilterModel& model, const SignalMatrix& window,
                            std::span<const std::string> channels) {
    if (!channels.empty() && !std::equal(channels.begin(), channels.end(), model.channels.begin(), model.channels.end())) {
        throw Error(ErrorKind::invalid_argument, "window channel order differs from the training order");
    }
    if (window.rows() != model.filters.rows()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("window has {} channels, filters expect {}", window.rows(), model.filters.rows()));
    }
    return model.filters.transpose() * window;
}

}  // namespace xtask::model
