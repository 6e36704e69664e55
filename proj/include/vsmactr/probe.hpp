#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vsmactr/embedding.hpp"

namespace vsmactr {

/// Penalized cross-entropy for a softmax model with class 0 as reference:
/// parameters are a (dim + 1) x (classes - 1) matrix whose last row is the
/// unpenalized bias. Objective = sum_i -ln p(y_i | x_i) + (lambda/2) |W|^2.
class ProbeObjective {
public:
    /// Throws Error{invalid_argument} for classes < 2, empty or mismatched
    /// input and targets outside [0, classes).
    ProbeObjective(const Matrix& x, std::span<const int> y, int classes, double l2_lambda);

    Eigen::Index parameter_count() const noexcept { return (x_.cols() + 1) * (classes_ - 1); }
    int classes() const noexcept { return classes_; }

    double value(const Vector& theta) const;
    double value_and_gradient(const Vector& theta, Vector& grad) const;
    /// Dense Hessian; only sensible for small parameter counts.
    Matrix hessian(const Vector& theta) const;

private:
    Matrix logits(const Vector& theta) const; // n x classes, column 0 zero

    Matrix x_;
    std::vector<int> y_;
    int classes_;
    double lambda_;
};

struct ProbeOptions {
    double l2_lambda = 1.0;
    int folds = 10;
    std::uint64_t seed = 1;
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;
    bool standardize = true;
    /// Newton's method up to this many parameters, L-BFGS beyond.
    Eigen::Index newton_limit = 400;
};

struct ProbeModel {
    Matrix weights;      // (classes - 1) x (dim + 1), last column bias, standardized space
    Vector mean;         // per-feature centre used for standardization
    Vector scale;        // per-feature divisor (1 for constant features)
    double l2_lambda = 1.0;
    int classes = 2;
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;

    /// n x classes; rows sum to 1.
    Matrix predict_proba(const Matrix& x) const;
    std::vector<int> predict(const Matrix& x) const;
};

/// Fits one model on all rows. Non-convergence is recorded in the model,
/// not thrown.
ProbeModel fit_single(const Matrix& x, std::span<const int> y, int classes, const ProbeOptions& opt = {});

/// Mean of -ln p(target) (natural log). Throws Error{invalid_argument} when
/// targets are out of range or sizes differ.
double nll(const Matrix& proba, std::span<const int> y);
double nll(const ProbeModel& model, const Matrix& x, std::span<const int> y);
double accuracy(const Matrix& proba, std::span<const int> y);
double accuracy(const ProbeModel& model, const Matrix& x, std::span<const int> y);

struct ChanceBaseline {
    double nll = 0.0;
    double accuracy = 1.0;
};

/// Uniform guessing: ln(classes) and 1/classes. Throws Error{invalid_argument}
/// for empty targets or classes < 1.
ChanceBaseline chance_baseline(std::span<const int> targets, int classes);

/// Test-row indices for each fold, stratified by target, sorted. Throws
/// Error{degenerate_fold} when folds < 2 or there are fewer rows than folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> targets, int folds, std::uint64_t seed);

struct FoldMetrics {
    int fold = 0;
    std::size_t n_test = 0;
    double nll = 0.0;
    double accuracy = 0.0;
    int iterations = 0;
    bool converged = true;

    friend bool operator==(const FoldMetrics&, const FoldMetrics&) = default;
};

struct ProbeResult {
    std::vector<ProbeModel> models;
    std::vector<FoldMetrics> folds;
    double mean_nll = 0.0;
    double mean_accuracy = 0.0;

    bool all_converged() const;
};

/// k-fold cross-validated probe. Throws Error{invalid_argument} for non-finite
/// features and Error{degenerate_fold} when a training fold misses a class.
ProbeResult fit_probe(const Matrix& x, std::span<const int> y, int classes, const ProbeOptions& opt = {});

} // namespace vsmactr
