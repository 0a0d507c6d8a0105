#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace mtgbm {

enum class ObjectiveKind { RegressionL2, BinaryLogloss };

inline const char* to_string(ObjectiveKind k) {
    return k == ObjectiveKind::RegressionL2 ? "regression_l2" : "binary_logloss";
}

inline ObjectiveKind parse_objective(std::string_view s) {
    s = trim(s);
    if (s == "regression_l2" || s == "regression" || s == "l2") return ObjectiveKind::RegressionL2;
    if (s == "binary_logloss" || s == "binary" || s == "logloss") return ObjectiveKind::BinaryLogloss;
    fail(ErrorKind::InvalidArgument, "unknown objective '" + std::string(s) + "'");
}

// One objective per task.
using TaskObjectives = std::vector<ObjectiveKind>;

// Per-sample, per-task derivatives of the loss with respect to the raw score.
struct GradHess {
    Matrix<double> g;  // m x n
    Matrix<double> h;  // m x n

    std::size_t rows() const noexcept { return g.rows(); }
    std::size_t num_tasks() const noexcept { return g.cols(); }
};

inline constexpr double kProbEps = 1e-15;

inline double sigmoid(double raw) noexcept {
    // split by sign so exp never overflows
    if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
    const double e = std::exp(raw);
    return e / (1.0 + e);
}

// Maps a raw additive score to the task's output space. Probabilities are
// clamped into [eps, 1 - eps].
inline double transform_score(double raw, ObjectiveKind kind) noexcept {
    if (kind == ObjectiveKind::RegressionL2) return raw;
    return std::clamp(sigmoid(raw), kProbEps, 1.0 - kProbEps);
}

// Unaveraged per-sample loss.
inline double sample_loss(double label, double raw, ObjectiveKind kind) noexcept {
    if (kind == ObjectiveKind::RegressionL2) {
        const double d = label - raw;
        return d * d;
    }
    const double p = transform_score(raw, kind);
    return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

// Mean squared error or mean negative log-likelihood.
inline double loss(std::span<const double> labels, std::span<const double> scores, ObjectiveKind kind) {
    if (labels.size() != scores.size())
        fail(ErrorKind::LengthMismatch, "labels and scores differ in length");
    if (labels.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) sum += sample_loss(labels[i], scores[i], kind);
    return sum / static_cast<double>(labels.size());
}

// Gradient and hessian of one sample. L2 uses the half-squared-error
// convention (g = p - y, h = 1).
inline void sample_grad_hess(double label, double raw, ObjectiveKind kind, double& g, double& h) noexcept {
    if (kind == ObjectiveKind::RegressionL2) {
        g = raw - label;
        h = 1.0;
        return;
    }
    const double q = sigmoid(raw);
    g = q - label;
    h = q * (1.0 - q);
}

inline GradHess grad_hess(const Matrix<double>& labels, const Matrix<double>& raw_scores,
                          const TaskObjectives& objectives) {
    if (!labels.same_shape(raw_scores) || objectives.size() != labels.cols())
        fail(ErrorKind::ShapeMismatch, "labels, scores and objectives disagree on shape");
    GradHess gh{Matrix<double>(labels.rows(), labels.cols()), Matrix<double>(labels.rows(), labels.cols())};
    for (std::size_t i = 0; i < labels.rows(); ++i)
        for (std::size_t t = 0; t < labels.cols(); ++t)
            sample_grad_hess(labels(i, t), raw_scores(i, t), objectives[t], gh.g(i, t), gh.h(i, t));
    return gh;
}

// Starting score: label mean, or log-odds of the label mean for classification.
inline double base_score(std::span<const double> labels, ObjectiveKind kind) {
    if (labels.empty()) return 0.0;
    double sum = 0.0;
    for (double y : labels) sum += y;
    const double mean = sum / static_cast<double>(labels.size());
    if (kind == ObjectiveKind::RegressionL2) return mean;
    const double p = std::clamp(mean, kProbEps, 1.0 - kProbEps);
    return std::log(p / (1.0 - p));
}

}  // namespace mtgbm
