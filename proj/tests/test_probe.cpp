#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "support.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/probe.hpp"

using namespace vsmactr;

namespace {

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::invalid_argument;
}

testsupport::LabelledSet blobs(int n, int classes, int dims, double spread, std::uint64_t seed)
{
    Rng rng(seed);
    testsupport::LabelledSet s{Matrix(n, dims), std::vector<int>(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        s.y[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < dims; ++j) s.x(i, j) = standard_normal(rng) + (j % classes == c ? spread : 0.0);
    }
    return s;
}

Vector random_vector(Eigen::Index n, std::uint64_t seed)
{
    Rng rng(seed);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng, -1.0, 1.0);
    return v;
}

// Straightforward re-statement of the penalized objective used as a check.
double reference_objective(const Matrix& x, const std::vector<int>& y, int classes, double lambda, const Vector& theta)
{
    const auto d = x.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> z(static_cast<std::size_t>(classes), 0.0);
        for (int c = 1; c < classes; ++c) {
            double s = theta[(c - 1) * (d + 1) + d];
            for (Eigen::Index j = 0; j < d; ++j) s += x(i, j) * theta[(c - 1) * (d + 1) + j];
            z[static_cast<std::size_t>(c)] = s;
        }
        double denom = 0.0;
        for (double v : z) denom += std::exp(v);
        total -= std::log(std::exp(z[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])]) / denom);
    }
    double pen = 0.0;
    for (int c = 1; c < classes; ++c)
        for (Eigen::Index j = 0; j < d; ++j) pen += theta[(c - 1) * (d + 1) + j] * theta[(c - 1) * (d + 1) + j];
    return total + 0.5 * lambda * pen;
}

} // namespace

TEST_CASE("objective matches a direct evaluation")
{
    const auto s = blobs(30, 3, 4, 1.0, 5);
    const ProbeObjective obj(s.x, s.y, 3, 0.7);
    CHECK(obj.parameter_count() == 10);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Vector theta = random_vector(obj.parameter_count(), seed);
        CHECK(obj.value(theta) == doctest::Approx(reference_objective(s.x, s.y, 3, 0.7, theta)).epsilon(1e-12));
    }
    CHECK(obj.value(Vector::Zero(10)) == doctest::Approx(30 * std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("analytic gradient agrees with central differences")
{
    const double h = 1e-5;
    for (int classes : {2, 3, 6}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto s = blobs(25, classes, 3, 0.8, seed * 17 + static_cast<std::uint64_t>(classes));
            const ProbeObjective obj(s.x, s.y, classes, 0.5);
            const Vector theta = random_vector(obj.parameter_count(), seed + 100);
            Vector g;
            obj.value_and_gradient(theta, g);
            double worst = 0.0;
            for (Eigen::Index k = 0; k < theta.size(); ++k) {
                Vector a = theta, b = theta;
                a[k] += h;
                b[k] -= h;
                const double fd = (obj.value(a) - obj.value(b)) / (2 * h);
                worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-6}));
            }
            CAPTURE(classes);
            CHECK(worst <= 1e-4);
        }
    }
}

TEST_CASE("hessian agrees with differences of the gradient")
{
    const auto s = blobs(20, 3, 2, 1.0, 9);
    const ProbeObjective obj(s.x, s.y, 3, 0.3);
    const Vector theta = random_vector(obj.parameter_count(), 4);
    const Matrix h = obj.hessian(theta);
    CHECK((h - h.transpose()).norm() < 1e-12);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        Vector a = theta, b = theta;
        a[k] += 1e-6;
        b[k] -= 1e-6;
        Vector ga, gb;
        obj.value_and_gradient(a, ga);
        obj.value_and_gradient(b, gb);
        const Vector col = (ga - gb) / 2e-6;
        CHECK((col - h.col(k)).lpNorm<Eigen::Infinity>() <= 1e-5 * std::max(1.0, h.col(k).lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("objective validation")
{
    const Matrix x = Matrix::Ones(3, 2);
    const std::vector<int> y = {0, 1, 2};
    CHECK(code_of([&] { ProbeObjective(x, y, 2, 1.0); }) == Errc::invalid_argument);
    CHECK(code_of([&] { ProbeObjective(x, y, 1, 1.0); }) == Errc::invalid_argument);
    CHECK(code_of([&] { ProbeObjective(x, std::vector<int>{0, 1}, 3, 1.0); }) == Errc::invalid_argument);
    CHECK(code_of([&] { ProbeObjective(x, y, 3, -1.0); }) == Errc::invalid_argument);
}

TEST_CASE("separable synthetic set")
{
    const double bayes = testsupport::separable_bayes_error();
    CHECK(bayes == doctest::Approx(0.0013498980316301).epsilon(1e-10));
    const auto s = testsupport::separable_set();
    const auto r = fit_probe(s.x, s.y, 2);
    REQUIRE(r.folds.size() == 10);
    CHECK(r.all_converged());
    CHECK(r.mean_accuracy >= 0.95);
    CHECK(r.mean_accuracy >= 1.0 - bayes - 0.03);
    CHECK(r.mean_nll <= 0.2);
    for (const auto& m : r.models) CHECK(m.gradient_norm <= 1e-5);
    for (const auto& f : r.folds) {
        CHECK(f.n_test == 20);
        CHECK(f.nll >= 0.0);
        CHECK(f.accuracy >= 0.0);
        CHECK(f.accuracy <= 1.0);
    }
}

TEST_CASE("labels unrelated to features give chance performance")
{
    auto s = testsupport::separable_set(400, 3, 21);
    Rng rng(77);
    shuffle(s.y, rng);
    const auto r = fit_probe(s.x, s.y, 2);
    CHECK(std::abs(r.mean_accuracy - 0.5) <= 0.1);
    CHECK(std::abs(r.mean_nll - std::log(2.0)) <= 0.1);
}

TEST_CASE("heavy regularization shrinks weights to zero")
{
    const auto s = testsupport::separable_set(200, 2, 3);
    ProbeOptions opt;
    opt.l2_lambda = 1e12;
    const auto m = fit_single(s.x, s.y, 2, opt);
    CHECK(m.weights.leftCols(2).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(nll(m, s.x, s.y) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("predicted probabilities are proper")
{
    const auto s = blobs(120, 4, 5, 1.5, 8);
    const auto m = fit_single(s.x, s.y, 4);
    const Matrix p = m.predict_proba(s.x * 3.0);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-9);
        CHECK(p.row(i).minCoeff() > 0.0);
        CHECK(p.row(i).maxCoeff() < 1.0);
    }
    CHECK(code_of([&] { m.predict_proba(Matrix::Zero(2, 4)); }) == Errc::dimension_mismatch);
}

TEST_CASE("L-BFGS and Newton reach the same optimum")
{
    const auto s = blobs(150, 3, 6, 1.0, 12);
    ProbeOptions newton_opt;
    ProbeOptions lbfgs_opt;
    lbfgs_opt.newton_limit = 0;
    const auto a = fit_single(s.x, s.y, 3, newton_opt);
    const auto b = fit_single(s.x, s.y, 3, lbfgs_opt);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK((a.weights - b.weights).lpNorm<Eigen::Infinity>() < 1e-5);
    CHECK(a.iterations < b.iterations);
}

TEST_CASE("multinomial probe on separated blobs")
{
    const auto s = blobs(300, 6, 6, 4.0, 2);
    const auto r = fit_probe(s.x, s.y, 6);
    CHECK(r.all_converged());
    CHECK(r.mean_accuracy > 0.8);
    CHECK(r.mean_nll < std::log(6.0));
}

TEST_CASE("nll and accuracy of fixed predictors")
{
    const std::vector<int> y2 = {0, 1, 1, 0, 1};
    CHECK(nll(Matrix::Constant(5, 2, 0.5), y2) == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(nll(Matrix::Constant(5, 2, 0.5), y2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const std::vector<int> y6 = {0, 5, 3};
    CHECK(nll(Matrix::Constant(3, 6, 1.0 / 6.0), y6) == doctest::Approx(1.7918).epsilon(1e-4));
    Matrix onehot = Matrix::Zero(5, 2);
    for (int i = 0; i < 5; ++i) onehot(i, y2[static_cast<std::size_t>(i)]) = 1.0;
    CHECK(nll(onehot, y2) == 0.0);
    CHECK(accuracy(onehot, y2) == 1.0);
    CHECK(code_of([&] { nll(onehot, std::vector<int>{0, 2, 0, 0, 0}); }) == Errc::invalid_argument);
    CHECK(code_of([&] { nll(onehot, std::vector<int>{0}); }) == Errc::invalid_argument);
}

TEST_CASE("chance baseline")
{
    const std::vector<int> skewed = {0, 0, 0, 0, 1};
    auto c = chance_baseline(skewed, 2);
    CHECK(c.nll == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(c.accuracy == 0.5);
    c = chance_baseline(std::vector<int>{0, 3, 5}, 6);
    CHECK(c.nll == doctest::Approx(1.7918).epsilon(1e-4));
    CHECK(c.accuracy == doctest::Approx(1.0 / 6.0));
    c = chance_baseline(std::vector<int>{0, 0}, 1);
    CHECK(c.nll == 0.0);
    CHECK(c.accuracy == 1.0);
    CHECK(chance_baseline(std::vector<int>{0}, 6).nll > chance_baseline(std::vector<int>{0}, 2).nll);
    CHECK(code_of([] { chance_baseline(std::vector<int>{}, 2); }) == Errc::invalid_argument);
}

TEST_CASE("stratified folds partition the rows")
{
    std::vector<int> y;
    for (int i = 0; i < 103; ++i) y.push_back(i % 7 == 0 ? 2 : i % 2);
    const auto folds = stratified_folds(y, 10, 4);
    REQUIRE(folds.size() == 10);
    std::set<std::size_t> all;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : folds) {
        CHECK(std::is_sorted(f.begin(), f.end()));
        all.insert(f.begin(), f.end());
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
    }
    CHECK(all.size() == 103);
    CHECK(hi - lo <= 1);
    for (int c = 0; c < 3; ++c) {
        std::size_t clo = SIZE_MAX, chi = 0;
        for (const auto& f : folds) {
            const auto k = static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [&](std::size_t i) { return y[i] == c; }));
            clo = std::min(clo, k);
            chi = std::max(chi, k);
        }
        CHECK(chi - clo <= 1);
    }
    CHECK(stratified_folds(y, 10, 4) == folds);
    CHECK(stratified_folds(y, 10, 5) != folds);
    CHECK(code_of([&] { stratified_folds(y, 1, 4); }) == Errc::degenerate_fold);
    CHECK(code_of([&] { stratified_folds(std::vector<int>{0, 1}, 3, 4); }) == Errc::degenerate_fold);
}

TEST_CASE("folds missing a class are degenerate")
{
    auto s = testsupport::separable_set(40, 2, 1);
    CHECK(code_of([&] { fit_probe(s.x, s.y, 3); }) == Errc::degenerate_fold);
    s.y[3] = 2; // a single member of class 2 leaves one training part without it
    CHECK(code_of([&] { fit_probe(s.x, s.y, 3); }) == Errc::degenerate_fold);
    s.x(0, 0) = std::nan("");
    CHECK(code_of([&] { fit_probe(s.x, s.y, 3); }) == Errc::invalid_argument);
}

TEST_CASE("probe results are deterministic")
{
    const auto s = blobs(120, 3, 4, 1.0, 30);
    const auto a = fit_probe(s.x, s.y, 3);
    const auto b = fit_probe(s.x, s.y, 3);
    CHECK(a.folds == b.folds);
    CHECK(a.mean_nll == b.mean_nll);
}
