#pragma once

#include <span>
#include <string_view>

#include <Eigen/Core>

#include "xtask/core/types.hpp"

namespace xtask::model {

/// l1_weights: min ||w||_1 + C sum cw_i hinge_i (sparse weights).
/// l2_weights: min 0.5 ||w||^2 + C sum cw_i hinge_i (classic soft margin).
enum class SvmFormulation { l1_weights, l2_weights };

std::string_view to_string(SvmFormulation f);
SvmFormulation parse_svm_formulation(std::string_view text);

struct ClassWeights {
    double no_lrp = 1.0;
    double lrp = 2.0;

    double of(Label label) const { return label == Label::lrp ? lrp : no_lrp; }
    bool operator==(const ClassWeights&) const = default;
};

struct SvmOptions {
    SvmFormulation formulation = SvmFormulation::l1_weights;
    ClassWeights class_weights;
    int max_iterations = 0;  // 0: scaled to the problem size
    double tolerance = 1e-9;
};

struct LinearSvmModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double c = 1.0;
    ClassWeights class_weights;
    SvmFormulation formulation = SvmFormulation::l1_weights;
    double objective = 0.0;
    /// Dual multipliers, one per training instance.
    Eigen::VectorXd dual;
    int iterations = 0;

    double score(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
    bool operator==(const LinearSvmModel&) const = default;
};

/// Labels map LRP -> +1, NoLRP -> -1. `features` holds one instance per row.
LinearSvmModel train_svm(const Eigen::MatrixXd& features, std::span<const Label> labels, double c,
                         const SvmOptions& options = {});

/// Primal objective of (weights, bias) under the model's formulation.
double svm_objective(const LinearSvmModel& model, const Eigen::MatrixXd& features, std::span<const Label> labels);

}  // namespace xtask::model
