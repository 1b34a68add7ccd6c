#include "xtask/model/platt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::model {

double PlattCalibrator::probability(double score) const {
    // Evaluated on the side that cannot overflow.
    const double f = a * score + b;
    return f >= 0.0 ? std::exp(-f) / (1.0 + std::exp(-f)) : 1.0 / (1.0 + std::exp(f));
}

namespace {

// Negative log-likelihood of targets t under p = 1/(1+exp(f)).
double nll(std::span<const double> s, const std::vector<double>& t, double a, double b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = a * s[i] + b;
        sum += f >= 0.0 ? t[i] * f + std::log1p(std::exp(-f)) : (t[i] - 1.0) * f + std::log1p(std::exp(f));
    }
    return sum;
}

}  // namespace

PlattCalibrator fit_platt(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorKind::invalid_argument, "scores and labels differ in length");
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), Label::lrp));
    const auto neg = static_cast<double>(labels.size()) - pos;
    if (pos == 0.0 || neg == 0.0) throw Error(ErrorKind::fit, "Platt calibration needs both classes");

    const double hi = (pos + 1.0) / (pos + 2.0);
    const double lo = 1.0 / (neg + 2.0);
    std::vector<double> t(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == Label::lrp ? hi : lo;

    constexpr int kMaxIterations = 100;
    constexpr double kGradientTol = 1e-8;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;

    PlattCalibrator cal;
    cal.a = 0.0;
    cal.b = std::log((neg + 1.0) / (pos + 1.0));
    double fval = nll(scores, t, cal.a, cal.b);

    for (int it = 0; it < kMaxIterations; ++it) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double p = cal.probability(scores[i]);
            const double q = 1.0 - p;
            const double d2 = p * q;
            const double d1 = t[i] - p;
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        cal.iterations = it;
        if (std::max(std::abs(g1), std::abs(g2)) <= kGradientTol) return cal;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        bool moved = false;
        while (step >= kMinStep) {
            const double na = cal.a + step * da;
            const double nb = cal.b + step * db;
            const double nf = nll(scores, t, na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                cal.a = na;
                cal.b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if (!moved) {
            // The objective no longer decreases in floating point: the Newton
            // step is below resolution, so the current point is the optimum.
            if (std::abs(gd) <= 1e-12 * std::max(1.0, std::abs(fval))) return cal;
            throw Error(ErrorKind::convergence,
                        fmt::format("Platt line search failed (gradient {:.3g}, {:.3g})", g1, g2));
        }
    }
    throw Error(ErrorKind::convergence, fmt::format("Platt fit did not converge in {} iterations", kMaxIterations));
}

}  // namespace xtask::model
