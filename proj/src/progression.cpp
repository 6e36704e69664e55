#include "vsmactr/progression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Eval {
    double ll = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();  // (slope, theta0, theta1)
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

Eval evaluate(std::span<const int> trials, std::span<const int> levels, const Eigen::Vector3d& p, bool derivatives)
{
    Eval e;
    const double beta = p[0];
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const double t = trials[i];
        const int y = levels[i];
        // up to two cumulative terms: upper (theta_y) and lower (theta_{y-1})
        struct Term {
            int theta;
            double eta, f, fprime, sign;
        };
        Term terms[2];
        int nt = 0;
        if (y <= 1) {
            const double eta = p[1 + y] - beta * t;
            const double F = sigmoid(eta);
            terms[nt++] = {1 + y, eta, F * (1 - F), F * (1 - F) * (1 - 2 * F), 1.0};
        }
        if (y >= 1) {
            const double eta = p[y] - beta * t;
            const double F = sigmoid(eta);
            terms[nt++] = {y, eta, F * (1 - F), F * (1 - F) * (1 - 2 * F), -1.0};
        }
        double prob;
        if (y == 0) {
            e.ll += -softplus(-terms[0].eta);
            prob = sigmoid(terms[0].eta);
        } else if (y == 2) {
            e.ll += -softplus(terms[0].eta);
            prob = 1.0 - sigmoid(terms[0].eta);
        } else {
            prob = sigmoid(terms[0].eta) - sigmoid(terms[1].eta);
            e.ll += std::log(std::max(prob, std::numeric_limits<double>::min()));
        }
        if (!derivatives) continue;
        prob = std::max(prob, std::numeric_limits<double>::min());
        for (int a = 0; a < nt; ++a) {
            Eigen::Vector3d ja = Eigen::Vector3d::Zero();
            ja[0] = -t;
            ja[terms[a].theta] = 1.0;
            e.grad += terms[a].sign * terms[a].f / prob * ja;
            for (int b = 0; b < nt; ++b) {
                Eigen::Vector3d jb = Eigen::Vector3d::Zero();
                jb[0] = -t;
                jb[terms[b].theta] = 1.0;
                double h = -terms[a].sign * terms[b].sign * terms[a].f * terms[b].f / (prob * prob);
                if (a == b) h += terms[a].sign * terms[a].fprime / prob;
                e.hess += h * ja * jb.transpose();
            }
        }
    }
    e.ll -= 0.5 * kOrderedLogitRidge * beta * beta;
    e.grad[0] -= kOrderedLogitRidge * beta;
    e.hess(0, 0) -= kOrderedLogitRidge;
    return e;
}

std::string range_text(int lo, int hi) { return lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi); }

} // namespace

OrderedLogit fit_ordered_logit(std::span<const int> trials, std::span<const int> levels, bool strict)
{
    if (trials.size() != levels.size() || trials.empty()) {
        throw Error(Errc::invalid_argument, "ordered logit needs one level per trial");
    }
    std::array<int, 3> lo{INT32_MAX, INT32_MAX, INT32_MAX};
    std::array<int, 3> hi{INT32_MIN, INT32_MIN, INT32_MIN};
    std::array<std::size_t, 3> count{};
    int tmin = INT32_MAX, tmax = INT32_MIN;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 0 || levels[i] > 2) throw Error(Errc::invalid_argument, "levels must be 0, 1 or 2");
        const auto l = static_cast<std::size_t>(levels[i]);
        lo[l] = std::min(lo[l], trials[i]);
        hi[l] = std::max(hi[l], trials[i]);
        ++count[l];
        tmin = std::min(tmin, trials[i]);
        tmax = std::max(tmax, trials[i]);
    }
    if (tmin == tmax) throw Error(Errc::invalid_argument, "need at least 2 distinct trials");
    for (int l = 0; l < 3; ++l) {
        if (count[static_cast<std::size_t>(l)] == 0) {
            throw Error(Errc::separation, "strategy level " + std::to_string(l) +
                                              " never occurs; its threshold has no finite estimate");
        }
    }

    OrderedLogit r;
    // complete separation: every cumulative split is ordered by trial in the same direction
    bool up = true, down = true;
    for (int j = 0; j < 2; ++j) {
        int low_max = INT32_MIN, low_min = INT32_MAX, high_max = INT32_MIN, high_min = INT32_MAX;
        for (int l = 0; l < 3; ++l) {
            const auto k = static_cast<std::size_t>(l);
            if (l <= j) {
                low_max = std::max(low_max, hi[k]);
                low_min = std::min(low_min, lo[k]);
            } else {
                high_max = std::max(high_max, hi[k]);
                high_min = std::min(high_min, lo[k]);
            }
        }
        up = up && low_max <= high_min;
        down = down && low_min >= high_max;
    }
    if (up || down) {
        r.separation = true;
        r.diagnostics = "levels separated by trial: 0 on " + range_text(lo[0], hi[0]) + ", 1 on " +
                        range_text(lo[1], hi[1]) + ", 2 on " + range_text(lo[2], hi[2]);
        if (strict) throw Error(Errc::separation, r.diagnostics);
    }

    const double n = static_cast<double>(levels.size());
    const double c0 = static_cast<double>(count[0]) / n;
    const double c1 = static_cast<double>(count[0] + count[1]) / n;
    Eigen::Vector3d p(0.0, std::log(c0 / (1 - c0)), std::log(c1 / (1 - c1)));
    Eval cur = evaluate(trials, levels, p, true);
    const double tol = 1e-9 * std::max(1.0, n);
    for (r.iterations = 0; r.iterations < 200; ++r.iterations) {
        if (cur.grad.lpNorm<Eigen::Infinity>() <= tol) {
            r.converged = true;
            break;
        }
        Eigen::Vector3d step = cur.hess.ldlt().solve(-cur.grad);
        if (!step.allFinite() || step.dot(cur.grad) <= 0.0) step = cur.grad;
        double s = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, s *= 0.5) {
            const Eigen::Vector3d trial = p + s * step;
            if (!(trial[2] > trial[1])) continue;
            // near the optimum the gain drops below rounding of ll itself
            const double ll = evaluate(trials, levels, trial, false).ll;
            if (ll >= cur.ll - 1e-12 * std::max(1.0, std::abs(cur.ll))) {
                p = trial;
                moved = true;
                break;
            }
        }
        if (!moved) break;
        cur = evaluate(trials, levels, p, true);
    }
    r.converged = r.converged || cur.grad.lpNorm<Eigen::Infinity>() <= tol;
    r.slope = p[0];
    r.thresholds = {p[1], p[2]};
    r.log_likelihood = cur.ll;
    return r;
}

Progression progression_stats(std::span<const DecisionOutcome> outcomes)
{
    std::map<int, std::pair<double, std::size_t>> per;
    std::vector<int> trials, levels;
    for (const auto& o : outcomes) {
        if (o.strategy < 0 || o.strategy > 2) throw Error(Errc::invalid_argument, "strategy code out of range");
        auto& [sum, n] = per[o.trial_index];
        sum += o.strategy;
        ++n;
        trials.push_back(o.trial_index);
        levels.push_back(o.strategy);
    }
    if (per.size() < 2) throw Error(Errc::invalid_argument, "progression needs at least 2 distinct trials");

    Progression p;
    for (const auto& [t, sn] : per) {
        p.trials.push_back(t);
        p.mean_strategy.push_back(sn.first / static_cast<double>(sn.second));
        p.counts.push_back(sn.second);
    }
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        tm += trials[i];
        ym += levels[i];
    }
    tm /= static_cast<double>(trials.size());
    ym /= static_cast<double>(trials.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        sxy += (trials[i] - tm) * (levels[i] - ym);
        sxx += (trials[i] - tm) * (trials[i] - tm);
    }
    p.ols_slope = sxy / sxx;
    p.ols_intercept = ym - p.ols_slope * tm;
    try {
        p.ordinal = fit_ordered_logit(trials, levels);
    } catch (const Error& e) {
        if (e.code() != Errc::separation) throw;
        p.ordinal_note = e.what();
    }
    return p;
}

double strategy_share(std::span<const DecisionOutcome> outcomes, int strategy, int first_trial, int last_trial)
{
    std::size_t hits = 0, n = 0;
    for (const auto& o : outcomes) {
        if (o.trial_index < first_trial || o.trial_index > last_trial) continue;
        ++n;
        hits += o.strategy == strategy;
    }
    if (n == 0) {
        throw Error(Errc::invalid_argument, "no outcomes in trials " + std::to_string(first_trial) + ".." +
                                                std::to_string(last_trial));
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

std::string format_progression(const Progression& p)
{
    std::string out = "trial  n      mean_strategy\n";
    for (std::size_t i = 0; i < p.trials.size(); ++i) {
        std::string t = std::to_string(p.trials[i]);
        std::string n = std::to_string(p.counts[i]);
        t.resize(std::max<std::size_t>(t.size() + 1, 7), ' ');
        n.resize(std::max<std::size_t>(n.size() + 1, 7), ' ');
        out += t + n + numfmt::trimmed_fixed(p.mean_strategy[i], 4) + "\n";
    }
    out += "ols_slope " + numfmt::shortest(p.ols_slope) + "\n";
    out += "ols_intercept " + numfmt::shortest(p.ols_intercept) + "\n";
    if (p.ordinal) {
        const auto& o = *p.ordinal;
        out += "ordered_logit_slope " + numfmt::shortest(o.slope) + "\n";
        out += "ordered_logit_thresholds " + numfmt::shortest(o.thresholds[0]) + " " +
               numfmt::shortest(o.thresholds[1]) + "\n";
        out += "ordered_logit_iterations " + std::to_string(o.iterations) + (o.converged ? "" : " (not converged)") + "\n";
        if (o.separation) out += "ordered_logit_separation " + o.diagnostics + "\n";
    } else {
        out += "ordered_logit unavailable: " + p.ordinal_note + "\n";
    }
    return out;
}

} // namespace vsmactr
