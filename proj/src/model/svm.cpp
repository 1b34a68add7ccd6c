#include "xtask/model/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>
#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::model {

std::string_view to_string(SvmFormulation f) {
    return f == SvmFormulation::l1_weights ? "l1-weights" : "l2-weights";
}

SvmFormulation parse_svm_formulation(std::string_view text) {
    if (text == "l1-weights") return SvmFormulation::l1_weights;
    if (text == "l2-weights") return SvmFormulation::l2_weights;
    throw Error(ErrorKind::invalid_argument,
                fmt::format("unknown SVM formulation '{}' (expected l1-weights or l2-weights)", text));
}

namespace {

Eigen::VectorXd signed_labels(std::span<const Label> labels) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i] == Label::lrp ? 1.0 : -1.0;
    return y;
}

// Bounded-variable primal simplex for
//   max  sum(alpha)
//   s.t. sum_i y_i alpha_i + a0            = 0
//        sum_i y_i x_ij alpha_i - r_j      = 0   (j = 1..d)
//        0 <= alpha_i <= u_i,  -1 <= r_j <= 1,  a0 = 0,
// the LP dual of the L1-weight hinge problem. The row multipliers of an
// optimal basis are (b, w).
class DualSimplex {
public:
    DualSimplex(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& upper, double tol,
                int max_iterations)
        : n_(x.rows()), d_(x.cols()), m_(d_ + 1), tol_(tol), max_iterations_(max_iterations) {
        const auto vars = n_ + d_ + 1;
        a_ = Eigen::MatrixXd::Zero(m_, vars);
        a_.block(0, 0, 1, n_) = y.transpose();
        a_.block(1, 0, d_, n_) = (x.array().colwise() * y.array()).matrix().transpose();
        a_.block(1, n_, d_, d_) = -Eigen::MatrixXd::Identity(d_, d_);
        a_(0, n_ + d_) = 1.0;

        cost_ = Eigen::VectorXd::Zero(vars);
        cost_.head(n_).setOnes();
        lower_ = Eigen::VectorXd::Zero(vars);
        upper_ = Eigen::VectorXd::Zero(vars);
        upper_.head(n_) = upper;
        lower_.segment(n_, d_).setConstant(-1.0);
        upper_.segment(n_, d_).setConstant(1.0);

        z_ = Eigen::VectorXd::Zero(vars);
        basic_.assign(static_cast<std::size_t>(vars), -1);
        basis_.push_back(n_ + d_);
        for (Eigen::Index j = 0; j < d_; ++j) basis_.push_back(n_ + j);
        for (std::size_t p = 0; p < basis_.size(); ++p) basic_[static_cast<std::size_t>(basis_[p])] = static_cast<int>(p);
    }

    void solve() {
        int stall = 0;
        bool bland = false;
        double last_objective = -std::numeric_limits<double>::infinity();
        factorize();
        for (iterations_ = 0; iterations_ < max_iterations_; ++iterations_) {
            const Eigen::VectorXd pi = lu_.transpose().solve(cost_basic());
            const Eigen::VectorXd reduced = cost_ - a_.transpose() * pi;

            Eigen::Index entering = -1;
            double best = 0.0;
            for (Eigen::Index j = 0; j < reduced.size(); ++j) {
                if (basic_[static_cast<std::size_t>(j)] >= 0 || upper_(j) - lower_(j) <= 0.0) continue;
                const double gain = z_(j) <= lower_(j) ? reduced(j) : -reduced(j);
                if (gain <= tol_) continue;
                if (bland) {
                    entering = j;
                    break;
                }
                if (gain > best) {
                    best = gain;
                    entering = j;
                }
            }
            if (entering < 0) {
                duals_ = pi;
                return;
            }

            const double dir = z_(entering) <= lower_(entering) ? 1.0 : -1.0;
            const Eigen::VectorXd delta = -dir * lu_.solve(Eigen::VectorXd(a_.col(entering)));
            double step = upper_(entering) - lower_(entering);
            Eigen::Index leaving = -1;
            const double pivot_floor = 1e-9 * std::max(1.0, delta.cwiseAbs().maxCoeff());
            for (Eigen::Index p = 0; p < m_; ++p) {
                const double dp = delta(p);
                if (std::abs(dp) <= pivot_floor) continue;
                const auto var = basis_[static_cast<std::size_t>(p)];
                const double room = dp > 0.0 ? upper_(var) - z_(var) : lower_(var) - z_(var);
                const double ratio = std::max(0.0, room / dp);
                const bool better = ratio < step - 1e-14 ||
                                    (ratio <= step + 1e-14 && leaving >= 0 &&
                                     (bland ? var < basis_[static_cast<std::size_t>(leaving)]
                                            : std::abs(dp) > std::abs(delta(leaving))));
                if (better) {
                    step = ratio;
                    leaving = p;
                }
            }

            if (leaving < 0) {
                // Bound flip: the entering variable crosses its whole range.
                z_(entering) = dir > 0.0 ? upper_(entering) : lower_(entering);
            } else {
                const auto out = basis_[static_cast<std::size_t>(leaving)];
                z_(entering) += dir * step;
                z_(out) = delta(leaving) > 0.0 ? upper_(out) : lower_(out);
                basic_[static_cast<std::size_t>(out)] = -1;
                basis_[static_cast<std::size_t>(leaving)] = entering;
                basic_[static_cast<std::size_t>(entering)] = static_cast<int>(leaving);
                factorize();
            }
            recompute_basic();

            const double objective = cost_.dot(z_);
            if (objective > last_objective + 1e-13 * std::max(1.0, std::abs(objective))) {
                last_objective = objective;
                stall = 0;
                bland = false;
            } else if (++stall > 2 * m_) {
                bland = true;
            }
        }
        throw Error(ErrorKind::convergence,
                    fmt::format("L1-weight SVM simplex did not converge in {} iterations (n={}, d={}, objective {})",
                                max_iterations_, n_, d_, cost_.dot(z_)));
    }

    Eigen::VectorXd alpha() const { return z_.head(n_); }
    const Eigen::VectorXd& duals() const { return duals_; }
    int iterations() const { return iterations_; }

private:
    Eigen::VectorXd cost_basic() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index p = 0; p < m_; ++p) cb(p) = cost_(basis_[static_cast<std::size_t>(p)]);
        return cb;
    }

    void factorize() {
        Eigen::MatrixXd b(m_, m_);
        for (Eigen::Index p = 0; p < m_; ++p) b.col(p) = a_.col(basis_[static_cast<std::size_t>(p)]);
        lu_.compute(b);
    }

    // B z_B = -N z_N, keeping basic values consistent with the nonbasic ones.
    void recompute_basic() {
        Eigen::VectorXd nonbasic = z_;
        for (const auto var : basis_) nonbasic(var) = 0.0;
        const Eigen::VectorXd zb = lu_.solve(-(a_ * nonbasic));
        for (Eigen::Index p = 0; p < m_; ++p) {
            const auto var = basis_[static_cast<std::size_t>(p)];
            z_(var) = std::clamp(zb(p), lower_(var), upper_(var));
        }
    }

    Eigen::Index n_, d_, m_;
    double tol_;
    int max_iterations_;
    int iterations_ = 0;
    Eigen::MatrixXd a_;
    Eigen::VectorXd cost_, lower_, upper_, z_, duals_;
    std::vector<Eigen::Index> basis_;
    std::vector<int> basic_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

LinearSvmModel train_l1(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& upper,
                        const SvmOptions& options) {
    const int cap = options.max_iterations > 0 ? options.max_iterations
                                               : static_cast<int>(50 * (x.rows() + x.cols() + 1) + 1000);
    DualSimplex lp(x, y, upper, options.tolerance, cap);
    lp.solve();
    LinearSvmModel model;
    model.bias = lp.duals()(0);
    model.weights = lp.duals().tail(x.cols());
    model.dual = lp.alpha();
    model.iterations = lp.iterations();
    return model;
}

// Dual coordinate descent with the bias folded in as a constant feature.
LinearSvmModel train_l2(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& upper,
                        const SvmOptions& options) {
    const auto n = x.rows();
    const auto d = x.cols();
    Eigen::MatrixXd xa(n, d + 1);
    xa << x, Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd q_diag = xa.rowwise().squaredNorm();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    const int cap = options.max_iterations > 0 ? options.max_iterations : 20000;
    const double eps = 1e-6;
    int epoch = 0;
    for (; epoch < cap; ++epoch) {
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double g = y(i) * xa.row(i).dot(w) - 1.0;
            double pg = g;
            if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
            else if (alpha(i) >= upper(i)) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (pg != 0.0 && q_diag(i) > 0.0) {
                const double old = alpha(i);
                alpha(i) = std::clamp(old - g / q_diag(i), 0.0, upper(i));
                w += (alpha(i) - old) * y(i) * xa.row(i).transpose();
            }
        }
        if (pg_max - pg_min <= eps) break;
    }
    if (epoch == cap) {
        throw Error(ErrorKind::convergence, fmt::format("L2-weight SVM coordinate descent did not converge in {} epochs", cap));
    }
    LinearSvmModel model;
    model.weights = w.head(d);
    model.bias = w(d);
    model.dual = alpha;
    model.iterations = epoch + 1;
    return model;
}

}  // namespace

LinearSvmModel train_svm(const Eigen::MatrixXd& features, std::span<const Label> labels, double c,
                         const SvmOptions& options) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error(ErrorKind::invalid_argument, "features and labels differ in length");
    }
    if (!(c > 0.0)) throw Error(ErrorKind::invalid_argument, fmt::format("C must be positive, got {}", c));
    const auto positives = std::count(labels.begin(), labels.end(), Label::lrp);
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
        throw Error(ErrorKind::fit, "SVM training data contain a single class");
    }
    if (!features.allFinite()) throw Error(ErrorKind::invalid_argument, "SVM features contain non-finite values");

    const Eigen::VectorXd y = signed_labels(labels);
    Eigen::VectorXd upper(y.size());
    for (std::size_t i = 0; i < labels.size(); ++i) upper(static_cast<Eigen::Index>(i)) = c * options.class_weights.of(labels[i]);

    LinearSvmModel model = options.formulation == SvmFormulation::l1_weights ? train_l1(features, y, upper, options)
                                                                             : train_l2(features, y, upper, options);
    model.c = c;
    model.class_weights = options.class_weights;
    model.formulation = options.formulation;
    model.objective = svm_objective(model, features, labels);
    return model;
}

double svm_objective(const LinearSvmModel& model, const Eigen::MatrixXd& features, std::span<const Label> labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = labels[i] == Label::lrp ? 1.0 : -1.0;
        const double margin = y * model.score(features.row(static_cast<Eigen::Index>(i)).transpose());
        loss += model.class_weights.of(labels[i]) * std::max(0.0, 1.0 - margin);
    }
    const double penalty = model.formulation == SvmFormulation::l1_weights ? model.weights.lpNorm<1>()
                                                                           : 0.5 * model.weights.squaredNorm();
    return penalty + model.c * loss;
}

}  // namespace xtask::model
