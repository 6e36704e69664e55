#pragma once

#include <span>
#include <string>
#include <vector>

#include "vsmactr/embedding.hpp"

namespace vsmactr {

/// Smallest N whose leading eigenvalues cover `threshold` of the total.
/// Throws Error{invalid_argument} for negative / increasing input and
/// Error{all_zero_variance} when every eigenvalue is zero.
std::size_t sree_component_count(std::span<const double> eigenvalues, double threshold = 0.70);

/// Eigen-decomposition of the sample covariance (divisor rows - 1), eigenvalues
/// in decreasing order, each eigenvector's largest-magnitude entry positive.
struct CovarianceEigen {
    Vector mean;
    Vector values;
    Matrix vectors; // columns
};

CovarianceEigen covariance_eigen(const Matrix& x);

struct ReducedEmbedding {
    Matrix scores;                        // rows x N
    Matrix loadings;                      // dim x N
    Vector mean;                          // dim
    std::vector<double> explained_ratio;  // N leading ratios
    std::vector<double> eigenvalues;      // all, decreasing
    Provenance provenance;

    Eigen::Index components() const noexcept { return scores.cols(); }
    /// mean + scores * loadings^T
    Matrix reconstruct() const;
    /// Projects new rows with the stored mean and loadings.
    Matrix project(const Matrix& x) const;
};

/// Throws Error{invalid_argument} (fewer than 2 rows, N = 0) and
/// Error{rank_deficient} when N exceeds the numerical rank.
ReducedEmbedding pca_reduce(const Matrix& x, std::size_t n);
/// N chosen by sree_component_count(eigenvalues, threshold).
ReducedEmbedding pca_reduce_sree(const Matrix& x, double threshold = 0.70);

struct PaddedBatch {
    std::vector<Matrix> blocks;            // each max_rows x dim
    std::vector<std::vector<bool>> mask;   // true where the row is original
    Eigen::Index max_rows = 0;
    Eigen::Index dim = 0;
};

/// Pads every matrix to the longest row count, filling new rows with that
/// matrix's own column means. Throws Error{mixed_dims}; empty matrices are
/// rejected with Error{invalid_argument}.
PaddedBatch pad_and_impute(std::span<const Matrix> ragged);

/// Row-major flattening of `reduced` followed by `tail`. With
/// normalize_parts each part is scaled to unit Euclidean norm first.
Vector flatten_and_concat(const Matrix& reduced, const Vector& tail, bool normalize_parts = false);

struct WilksResult {
    double lambda = 1.0;
    double bartlett_chi2 = 0.0;
    int dof = 0;
};

/// det(E) / det(E + H) for within-group scatter E and between-group scatter H.
/// Throws Error{invalid_argument} on precondition violations and
/// Error{singular_scatter} when E is not positive definite.
WilksResult wilks_lambda(std::span<const Matrix> groups);

/// Text matrix file: header lines, then one row per line, values in shortest
/// round-trip form.
struct MatrixFile {
    Matrix values;
    Provenance provenance;
    std::vector<double> explained_ratio;

    friend bool operator==(const MatrixFile& a, const MatrixFile& b)
    {
        return a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() && a.values == b.values &&
               a.provenance == b.provenance && a.explained_ratio == b.explained_ratio;
    }
};

std::string format_matrix_file(const MatrixFile& m);
/// Throws Error{parse_error}.
MatrixFile parse_matrix_file(std::string_view text);
/// Throws Error{io_failure}.
void write_matrix_file(const std::string& path, const MatrixFile& m);
MatrixFile read_matrix_file(const std::string& path);

} // namespace vsmactr
