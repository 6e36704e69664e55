#include "vsmactr/feature_lab.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <charconv>
#include <cmath>
#include <sstream>

#include "vsmactr/error.hpp"
#include "vsmactr/io.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

// relative cut below which an eigenvalue counts as zero
constexpr double kRankTol = 1e-10;

Eigen::Index numerical_rank(const Vector& values)
{
    if (values.size() == 0 || values[0] <= 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] > kRankTol * values[0]) ++r;
    }
    return r;
}

} // namespace

std::size_t sree_component_count(std::span<const double> eigenvalues, double threshold)
{
    if (eigenvalues.empty()) throw Error(Errc::invalid_argument, "no eigenvalues");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(Errc::invalid_argument, "threshold must be in (0, 1]");
    double total = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] >= 0.0)) throw Error(Errc::invalid_argument, "negative eigenvalue");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
            throw Error(Errc::invalid_argument, "eigenvalues must be non-increasing");
        }
        total += eigenvalues[i];
    }
    if (total == 0.0) throw Error(Errc::all_zero_variance, "all eigenvalues are zero");
    double cum = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        cum += eigenvalues[i];
        // cum / total >= threshold, tolerant of the last-bit error in cum
        if (cum >= threshold * total * (1.0 - 1e-12)) return i + 1;
    }
    return eigenvalues.size();
}

CovarianceEigen covariance_eigen(const Matrix& x)
{
    if (x.rows() < 2) throw Error(Errc::invalid_argument, "need at least 2 rows");
    if (!x.allFinite()) throw Error(Errc::invalid_argument, "matrix has non-finite values");
    CovarianceEigen out;
    out.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - out.mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success) throw Error(Errc::invalid_argument, "eigen-decomposition failed");
    const Eigen::Index d = cov.rows();
    out.values.resize(d);
    out.vectors.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        // solver returns increasing order
        out.values[i] = std::max(0.0, es.eigenvalues()[d - 1 - i]);
        Vector v = es.eigenvectors().col(d - 1 - i);
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < d; ++k) {
            if (std::abs(v[k]) > std::abs(v[arg]) * (1.0 + 1e-12)) arg = k;
        }
        if (v[arg] < 0) v = -v;
        out.vectors.col(i) = v;
    }
    return out;
}

Matrix ReducedEmbedding::reconstruct() const
{
    return (scores * loadings.transpose()).rowwise() + mean.transpose();
}

Matrix ReducedEmbedding::project(const Matrix& x) const
{
    if (x.cols() != mean.size()) throw Error(Errc::mixed_dims, "projection input has the wrong dim");
    return (x.rowwise() - mean.transpose()) * loadings;
}

ReducedEmbedding pca_reduce(const Matrix& x, std::size_t n)
{
    if (n == 0) throw Error(Errc::invalid_argument, "N must be >= 1");
    auto ce = covariance_eigen(x);
    const auto rank = numerical_rank(ce.values);
    if (static_cast<Eigen::Index>(n) > rank) {
        throw Error(Errc::rank_deficient,
                    "N = " + std::to_string(n) + " exceeds the covariance rank " + std::to_string(rank));
    }
    const auto N = static_cast<Eigen::Index>(n);
    ReducedEmbedding r;
    r.mean = ce.mean;
    r.loadings = ce.vectors.leftCols(N);
    r.scores = (x.rowwise() - ce.mean.transpose()) * r.loadings;
    const double total = ce.values.sum();
    r.eigenvalues.assign(ce.values.data(), ce.values.data() + ce.values.size());
    for (Eigen::Index i = 0; i < N; ++i) r.explained_ratio.push_back(ce.values[i] / total);
    return r;
}

ReducedEmbedding pca_reduce_sree(const Matrix& x, double threshold)
{
    auto ce = covariance_eigen(x);
    const std::vector<double> ev(ce.values.data(), ce.values.data() + ce.values.size());
    const std::size_t n = sree_component_count(ev, threshold);
    return pca_reduce(x, n);
}

PaddedBatch pad_and_impute(std::span<const Matrix> ragged)
{
    PaddedBatch out;
    if (ragged.empty()) return out;
    out.dim = ragged.front().cols();
    for (const auto& m : ragged) {
        if (m.cols() != out.dim) {
            throw Error(Errc::mixed_dims, "dims " + std::to_string(out.dim) + " and " + std::to_string(m.cols()));
        }
        if (m.rows() == 0) throw Error(Errc::invalid_argument, "cannot impute an empty matrix");
        out.max_rows = std::max(out.max_rows, m.rows());
    }
    for (const auto& m : ragged) {
        Matrix b(out.max_rows, out.dim);
        b.topRows(m.rows()) = m;
        if (m.rows() < out.max_rows) {
            const Eigen::RowVectorXd mean = m.colwise().mean();
            b.bottomRows(out.max_rows - m.rows()).rowwise() = mean;
        }
        std::vector<bool> mask(static_cast<std::size_t>(out.max_rows), false);
        std::fill(mask.begin(), mask.begin() + m.rows(), true);
        out.blocks.push_back(std::move(b));
        out.mask.push_back(std::move(mask));
    }
    return out;
}

Vector flatten_and_concat(const Matrix& reduced, const Vector& tail, bool normalize_parts)
{
    const Eigen::Index head = reduced.size();
    Vector out(head + tail.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
        for (Eigen::Index j = 0; j < reduced.cols(); ++j) out[k++] = reduced(i, j);
    }
    out.tail(tail.size()) = tail;
    if (normalize_parts) {
        const double a = out.head(head).norm();
        const double b = out.tail(tail.size()).norm();
        if (a > 0) out.head(head) /= a;
        if (b > 0) out.tail(tail.size()) /= b;
    }
    return out;
}

WilksResult wilks_lambda(std::span<const Matrix> groups)
{
    if (groups.size() < 2) throw Error(Errc::invalid_argument, "need at least 2 groups");
    const Eigen::Index p = groups.front().cols();
    Eigen::Index n = 0;
    for (const auto& g : groups) {
        if (g.cols() != p) throw Error(Errc::mixed_dims, "groups differ in dim");
        if (g.rows() < 2) throw Error(Errc::invalid_argument, "every group needs at least 2 rows");
        n += g.rows();
    }
    const auto gcount = static_cast<Eigen::Index>(groups.size());
    if (n <= p + gcount) throw Error(Errc::invalid_argument, "total rows must exceed dims + groups");

    Vector grand = Vector::Zero(p);
    for (const auto& g : groups) grand += g.colwise().sum().transpose();
    grand /= static_cast<double>(n);

    Matrix E = Matrix::Zero(p, p);
    Matrix H = Matrix::Zero(p, p);
    for (const auto& g : groups) {
        const Vector m = g.colwise().mean().transpose();
        const Matrix c = g.rowwise() - m.transpose();
        E += c.transpose() * c;
        const Vector d = m - grand;
        H += static_cast<double>(g.rows()) * d * d.transpose();
    }
    const Matrix T = E + H;
    Eigen::LLT<Matrix> le(E);
    Eigen::LLT<Matrix> lt(T);
    if (le.info() != Eigen::Success || lt.info() != Eigen::Success) {
        throw Error(Errc::singular_scatter, "within-group scatter is not positive definite");
    }
    const Vector de = Matrix(le.matrixL()).diagonal();
    const Vector dt = Matrix(lt.matrixL()).diagonal();
    if (de.minCoeff() <= 1e-12 * std::max(1.0, de.maxCoeff())) {
        throw Error(Errc::singular_scatter, "within-group scatter is numerically singular");
    }
    const double log_lambda = 2.0 * (de.array().log().sum() - dt.array().log().sum());
    WilksResult r;
    r.lambda = std::exp(log_lambda);
    r.dof = static_cast<int>(p * (gcount - 1));
    r.bartlett_chi2 = -(static_cast<double>(n) - 1.0 - static_cast<double>(p + gcount) / 2.0) * log_lambda;
    return r;
}

std::string format_matrix_file(const MatrixFile& m)
{
    for (const auto* s : {&m.provenance.provider, &m.provenance.model}) {
        if (s->find('\n') != std::string::npos) throw Error(Errc::invalid_argument, "provenance contains a newline");
    }
    std::string out = "vsmactr-matrix 1\n";
    out += "rows " + std::to_string(m.values.rows()) + "\n";
    out += "cols " + std::to_string(m.values.cols()) + "\n";
    out += "provider " + m.provenance.provider + "\n";
    out += "model " + m.provenance.model + "\n";
    out += "explained";
    for (double e : m.explained_ratio) out += " " + numfmt::shortest(e);
    out += "\ndata\n";
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
            if (j) out += ' ';
            out += numfmt::shortest(m.values(i, j));
        }
        out += '\n';
    }
    return out;
}

MatrixFile parse_matrix_file(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    auto next = [&](std::string_view key) {
        if (!std::getline(in, line) || !(line == key || line.starts_with(std::string(key) + " "))) {
            throw Error(Errc::parse_error, "matrix file: expected '" + std::string(key) + "'");
        }
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    };
    auto to_double = [](const std::string& s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw Error(Errc::parse_error, "matrix file: bad number '" + s + "'");
        }
        return v;
    };
    auto to_index = [&](const std::string& s) {
        const double v = to_double(s);
        if (v < 0 || v != std::floor(v)) throw Error(Errc::parse_error, "matrix file: bad size '" + s + "'");
        return static_cast<Eigen::Index>(v);
    };
    if (next("vsmactr-matrix") != "1") throw Error(Errc::parse_error, "matrix file: unsupported version");
    MatrixFile m;
    const auto rows = to_index(next("rows"));
    const auto cols = to_index(next("cols"));
    m.provenance.provider = next("provider");
    m.provenance.model = next("model");
    {
        std::istringstream ex(next("explained"));
        std::string tok;
        while (ex >> tok) m.explained_ratio.push_back(to_double(tok));
    }
    next("data");
    m.values.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw Error(Errc::parse_error, "matrix file: missing row " + std::to_string(i));
        std::istringstream row(line);
        std::string tok;
        Eigen::Index j = 0;
        while (row >> tok) {
            if (j >= cols) throw Error(Errc::parse_error, "matrix file: row " + std::to_string(i) + " too long");
            m.values(i, j++) = to_double(tok);
        }
        if (j != cols) throw Error(Errc::parse_error, "matrix file: row " + std::to_string(i) + " too short");
    }
    return m;
}

void write_matrix_file(const std::string& path, const MatrixFile& m) { io::write_file(path, format_matrix_file(m)); }

MatrixFile read_matrix_file(const std::string& path) { return parse_matrix_file(io::read_file(path)); }

} // namespace vsmactr
