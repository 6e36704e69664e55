#include "vsmactr/probe.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <future>

#include "vsmactr/error.hpp"
#include "vsmactr/rng.hpp"

namespace vsmactr {

namespace {

void check_targets(std::span<const int> y, int classes)
{
    for (int t : y) {
        if (t < 0 || t >= classes) {
            throw Error(Errc::invalid_argument, "target " + std::to_string(t) + " outside [0, " +
                                                    std::to_string(classes) + ")");
        }
    }
}

struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& x, bool enabled)
    {
        Standardizer s;
        const auto d = x.cols();
        s.mean = Vector::Zero(d);
        s.scale = Vector::Ones(d);
        if (!enabled) return s;
        s.mean = x.colwise().mean().transpose();
        if (x.rows() > 1) {
            const Matrix c = x.rowwise() - s.mean.transpose();
            const Vector sd = (c.colwise().squaredNorm() / static_cast<double>(x.rows() - 1)).cwiseSqrt().transpose();
            for (Eigen::Index j = 0; j < d; ++j) s.scale[j] = sd[j] > 1e-12 ? sd[j] : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const
    {
        return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }
};

struct OptimResult {
    Vector theta;
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
};

constexpr double kArmijo = 1e-4;

// Backtracking along `dir`; returns false when no step decreases f.
bool line_search(const ProbeObjective& obj, Vector& theta, double& f, Vector& g, const Vector& dir)
{
    const double slope = g.dot(dir);
    if (!(slope < 0.0)) return false;
    Vector trial_g(theta.size());
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Vector trial = theta + t * dir;
        const double ft = obj.value_and_gradient(trial, trial_g);
        // the slack admits steps whose gain is below the rounding of f
        const double slack = 1e-12 * std::max(1.0, std::abs(f));
        if (std::isfinite(ft) && ft <= f + kArmijo * t * slope + slack) {
            theta = trial;
            f = ft;
            g = trial_g;
            return true;
        }
    }
    return false;
}

OptimResult newton(const ProbeObjective& obj, const ProbeOptions& opt)
{
    OptimResult r;
    r.theta = Vector::Zero(obj.parameter_count());
    Vector g;
    double f = obj.value_and_gradient(r.theta, g);
    for (; r.iterations < opt.max_iterations; ++r.iterations) {
        if (g.norm() <= opt.gradient_tolerance) {
            r.converged = true;
            break;
        }
        Eigen::LDLT<Matrix> ldlt(obj.hessian(r.theta));
        Vector dir = ldlt.info() == Eigen::Success ? Vector(-ldlt.solve(g)) : Vector(-g);
        if (!dir.allFinite() || g.dot(dir) >= 0.0) dir = -g;
        if (!line_search(obj, r.theta, f, g, dir)) break;
    }
    r.gradient_norm = g.norm();
    r.converged = r.converged || r.gradient_norm <= opt.gradient_tolerance;
    return r;
}

OptimResult lbfgs(const ProbeObjective& obj, const ProbeOptions& opt)
{
    constexpr std::size_t kMemory = 10;
    OptimResult r;
    r.theta = Vector::Zero(obj.parameter_count());
    Vector g;
    double f = obj.value_and_gradient(r.theta, g);
    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho;
    for (; r.iterations < opt.max_iterations; ++r.iterations) {
        if (g.norm() <= opt.gradient_tolerance) {
            r.converged = true;
            break;
        }
        Vector q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Vector dir = -q;
        if (s_hist.empty()) dir /= std::max(1.0, g.norm());
        const Vector old_theta = r.theta;
        const Vector old_g = g;
        if (!line_search(obj, r.theta, f, g, dir)) {
            if (s_hist.empty()) break;
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            continue;
        }
        Vector s = r.theta - old_theta;
        Vector y = g - old_g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (s_hist.size() > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho.pop_front();
            }
        }
    }
    r.gradient_norm = g.norm();
    r.converged = r.converged || r.gradient_norm <= opt.gradient_tolerance;
    return r;
}

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx)
{
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

std::vector<int> pick(std::span<const int> y, const std::vector<std::size_t>& idx)
{
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(y[i]);
    return out;
}

} // namespace

ProbeObjective::ProbeObjective(const Matrix& x, std::span<const int> y, int classes, double l2_lambda)
    : x_(x), y_(y.begin(), y.end()), classes_(classes), lambda_(l2_lambda)
{
    if (classes < 2) throw Error(Errc::invalid_argument, "a probe needs at least 2 classes");
    if (x.rows() == 0 || x.cols() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
        throw Error(Errc::invalid_argument, "probe input must be non-empty with one target per row");
    }
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw Error(Errc::invalid_argument, "lambda must be >= 0");
    check_targets(y, classes);
}

Matrix ProbeObjective::logits(const Vector& theta) const
{
    const auto d = x_.cols();
    Eigen::Map<const Matrix> t(theta.data(), d + 1, classes_ - 1);
    Matrix z(x_.rows(), classes_);
    z.col(0).setZero();
    z.rightCols(classes_ - 1) = x_ * t.topRows(d);
    z.rightCols(classes_ - 1).rowwise() += t.row(d);
    return z;
}

double ProbeObjective::value(const Vector& theta) const
{
    Vector g;
    return value_and_gradient(theta, g);
}

double ProbeObjective::value_and_gradient(const Vector& theta, Vector& grad) const
{
    const auto d = x_.cols();
    const auto n = x_.rows();
    Matrix p = logits(theta);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = p.row(i).maxCoeff();
        const double lse = m + std::log((p.row(i).array() - m).exp().sum());
        loss += lse - p(i, y_[static_cast<std::size_t>(i)]);
        p.row(i) = (p.row(i).array() - lse).exp().matrix();
    }
    for (Eigen::Index i = 0; i < n; ++i) p(i, y_[static_cast<std::size_t>(i)]) -= 1.0;

    Eigen::Map<const Matrix> t(theta.data(), d + 1, classes_ - 1);
    grad.resize(theta.size());
    Eigen::Map<Matrix> gm(grad.data(), d + 1, classes_ - 1);
    const auto resid = p.rightCols(classes_ - 1);
    gm.topRows(d) = x_.transpose() * resid + lambda_ * t.topRows(d);
    gm.row(d) = resid.colwise().sum();
    return loss + 0.5 * lambda_ * t.topRows(d).squaredNorm();
}

Matrix ProbeObjective::hessian(const Vector& theta) const
{
    const auto d = x_.cols();
    const auto n = x_.rows();
    const auto k = classes_ - 1;
    Matrix p = logits(theta);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    Matrix xt(n, d + 1);
    xt.leftCols(d) = x_;
    xt.col(d).setOnes();
    Matrix h = Matrix::Zero(parameter_count(), parameter_count());
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = a; b < k; ++b) {
            Vector w = -p.col(a + 1).cwiseProduct(p.col(b + 1));
            if (a == b) w += p.col(a + 1);
            const Matrix block = xt.transpose() * w.asDiagonal() * xt;
            h.block(a * (d + 1), b * (d + 1), d + 1, d + 1) = block;
            if (a != b) h.block(b * (d + 1), a * (d + 1), d + 1, d + 1) = block.transpose();
        }
        for (Eigen::Index r = 0; r < d; ++r) h(a * (d + 1) + r, a * (d + 1) + r) += lambda_;
    }
    return h;
}

Matrix ProbeModel::predict_proba(const Matrix& x) const
{
    if (x.cols() != mean.size()) {
        throw Error(Errc::dimension_mismatch, "probe expects " + std::to_string(mean.size()) + " features, got " +
                                                  std::to_string(x.cols()));
    }
    const Matrix xs = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    const auto d = xs.cols();
    Matrix z(x.rows(), classes);
    z.col(0).setZero();
    z.rightCols(classes - 1) = xs * weights.leftCols(d).transpose();
    z.rightCols(classes - 1).rowwise() += weights.col(d).transpose();
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - m).exp().matrix();
        z.row(i) /= z.row(i).sum();
    }
    return z;
}

std::vector<int> ProbeModel::predict(const Matrix& x) const
{
    const Matrix p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index arg = 0;
        p.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
}

ProbeModel fit_single(const Matrix& x, std::span<const int> y, int classes, const ProbeOptions& opt)
{
    if (!x.allFinite()) throw Error(Errc::invalid_argument, "probe features must be finite");
    const auto st = Standardizer::fit(x, opt.standardize);
    const ProbeObjective obj(st.apply(x), y, classes, opt.l2_lambda);
    const auto r = obj.parameter_count() <= opt.newton_limit ? newton(obj, opt) : lbfgs(obj, opt);
    ProbeModel m;
    Eigen::Map<const Matrix> t(r.theta.data(), x.cols() + 1, classes - 1);
    m.weights = t.transpose();
    m.mean = st.mean;
    m.scale = st.scale;
    m.l2_lambda = opt.l2_lambda;
    m.classes = classes;
    m.iterations = r.iterations;
    m.converged = r.converged;
    m.gradient_norm = r.gradient_norm;
    return m;
}

double nll(const Matrix& proba, std::span<const int> y)
{
    if (static_cast<std::size_t>(proba.rows()) != y.size() || y.empty()) {
        throw Error(Errc::invalid_argument, "nll needs one probability row per target");
    }
    check_targets(y, static_cast<int>(proba.cols()));
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s -= std::log(proba(static_cast<Eigen::Index>(i), y[i]));
    return s / static_cast<double>(y.size());
}

double nll(const ProbeModel& model, const Matrix& x, std::span<const int> y) { return nll(model.predict_proba(x), y); }

double accuracy(const Matrix& proba, std::span<const int> y)
{
    if (static_cast<std::size_t>(proba.rows()) != y.size() || y.empty()) {
        throw Error(Errc::invalid_argument, "accuracy needs one probability row per target");
    }
    check_targets(y, static_cast<int>(proba.cols()));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        Eigen::Index arg = 0;
        proba.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        hits += arg == y[i];
    }
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

double accuracy(const ProbeModel& model, const Matrix& x, std::span<const int> y)
{
    return accuracy(model.predict_proba(x), y);
}

ChanceBaseline chance_baseline(std::span<const int> targets, int classes)
{
    if (targets.empty() || classes < 1) throw Error(Errc::invalid_argument, "chance baseline needs targets and classes");
    check_targets(targets, classes);
    return {std::log(static_cast<double>(classes)), 1.0 / classes};
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> targets, int folds, std::uint64_t seed)
{
    if (folds < 2) throw Error(Errc::degenerate_fold, "need at least 2 folds");
    if (targets.size() < static_cast<std::size_t>(folds)) {
        throw Error(Errc::degenerate_fold, std::to_string(targets.size()) + " rows cannot fill " +
                                               std::to_string(folds) + " folds");
    }
    std::vector<int> labels(targets.begin(), targets.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    for (int c : labels) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == c) idx.push_back(i);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(c))));
        shuffle(idx, rng);
        for (auto i : idx) {
            out[next].push_back(i);
            next = (next + 1) % out.size();
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

bool ProbeResult::all_converged() const
{
    return std::all_of(models.begin(), models.end(), [](const ProbeModel& m) { return m.converged; });
}

ProbeResult fit_probe(const Matrix& x, std::span<const int> y, int classes, const ProbeOptions& opt)
{
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
        throw Error(Errc::invalid_argument, "probe needs one target per feature row");
    }
    if (!x.allFinite()) throw Error(Errc::invalid_argument, "probe features must be finite");
    check_targets(y, classes);
    const auto test_sets = stratified_folds(y, opt.folds, opt.seed);

    std::vector<std::vector<std::size_t>> train_sets;
    for (std::size_t f = 0; f < test_sets.size(); ++f) {
        std::vector<bool> in_test(y.size(), false);
        for (auto i : test_sets[f]) in_test[i] = true;
        std::vector<std::size_t> train;
        std::vector<bool> seen(static_cast<std::size_t>(classes), false);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!in_test[i]) {
                train.push_back(i);
                seen[static_cast<std::size_t>(y[i])] = true;
            }
        }
        for (int c = 0; c < classes; ++c) {
            if (!seen[static_cast<std::size_t>(c)]) {
                throw Error(Errc::degenerate_fold, "training part of fold " + std::to_string(f) + " has no class " +
                                                       std::to_string(c));
            }
        }
        train_sets.push_back(std::move(train));
    }

    std::vector<std::future<ProbeModel>> jobs;
    for (const auto& train : train_sets) {
        jobs.push_back(std::async(std::launch::async, [&x, &y, &train, classes, &opt] {
            return fit_single(rows_of(x, train), pick(y, train), classes, opt);
        }));
    }
    ProbeResult out;
    for (std::size_t f = 0; f < jobs.size(); ++f) {
        out.models.push_back(jobs[f].get());
        const auto& m = out.models.back();
        const Matrix xt = rows_of(x, test_sets[f]);
        const auto yt = pick(y, test_sets[f]);
        const Matrix p = m.predict_proba(xt);
        FoldMetrics fm{static_cast<int>(f), yt.size(), nll(p, yt), accuracy(p, yt), m.iterations, m.converged};
        out.mean_nll += fm.nll;
        out.mean_accuracy += fm.accuracy;
        out.folds.push_back(fm);
    }
    out.mean_nll /= static_cast<double>(out.folds.size());
    out.mean_accuracy /= static_cast<double>(out.folds.size());
    return out;
}

} // namespace vsmactr
