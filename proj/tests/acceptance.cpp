// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <unistd.h>

#include "jacobi.hpp"
#include "support.hpp"
#include "vsmactr/dataset.hpp"
#include "vsmactr/engine.hpp"
#include "vsmactr/feature_lab.hpp"
#include "vsmactr/io.hpp"
#include "vsmactr/pipeline.hpp"
#include "vsmactr/probe.hpp"
#include "vsmactr/progression.hpp"
#include "vsmactr/report.hpp"
#include "vsmactr/trace_codec.hpp"

using namespace vsmactr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail)
{
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v)
{
    std::ostringstream o;
    o << v;
    return o.str();
}

// Guards a criterion so an exception reports FAIL instead of aborting the run.
template <typename F>
void criterion(const std::string& name, F&& body)
{
    try {
        body();
    } catch (const std::exception& e) {
        verdict(name, false, std::string("exception: ") + e.what());
    }
}

void golden_arithmetic()
{
    const auto t0 = Clock::now();
    const auto log = parse_string(testsupport::read_file(testsupport::fixture_path("golden_trace.txt")));
    int count = 0;
    double worst = 0.0;
    double alpha = 0.0;
    for (const auto& e : log) {
        if (e.kind == TraceKind::reward) alpha = e.alpha;
        if (e.kind != TraceKind::utility_update) continue;
        const auto st = reward_step(double(float(e.u_prev)), e.reward, SimTime::from_seconds(e.dt), alpha,
                                    UtilityPrecision::single);
        worst = std::max(worst, std::abs(st.u_new - e.u_new));
        ++count;
    }
    const double secs = seconds_since(t0);
    verdict("golden utility arithmetic", count == 22 && worst <= 1e-5 && secs < 1.0,
            std::to_string(count) + " updates, max error " + num(worst) + ", " + num(secs) + " s");
}

void worked_example()
{
    const auto st = reward_step(-0.65, -2.0, SimTime::from_ms(500), 0.2, UtilityPrecision::double_precision);
    const double err = std::abs(st.u_new - (-1.02));
    verdict("worked example", st.r_eff == -2.5 && err <= 1e-9,
            "R_eff " + num(st.r_eff) + ", U " + num(st.u_new) + ", error " + num(err));
}

void trace_round_trip(const BatchResult& batch)
{
    const auto t0 = Clock::now();
    const auto golden = testsupport::read_file(testsupport::fixture_path("golden_trace.txt"));
    const bool identical = emit_string(parse_string(golden)) == golden;
    std::size_t bad = 0;
    for (const auto& t : batch.traces) {
        if (!audit_utility_updates(parse_string(emit_string(t.log))).empty()) ++bad;
    }
    const double secs = seconds_since(t0);
    verdict("trace round trip", identical && bad == 0 && secs < 1.0,
            std::string(identical ? "golden byte-identical" : "golden differs") + ", " + std::to_string(bad) + " of " +
                std::to_string(batch.traces.size()) + " traces fail the audit, " + num(secs) + " s");
}

void softmax_properties()
{
    // chi-square on equal utilities
    const int k = 4, n = 100000;
    const std::vector<double> equal(k, 1.5);
    EngineConfig cfg;
    Rng rng(99);
    std::vector<int> hits(k, 0);
    for (int i = 0; i < n; ++i) ++hits[select(equal, cfg, rng)];
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - n / double(k)) * (h - n / double(k)) / (n / double(k));
    const double dof = k - 1;
    const bool uniform_ok = std::abs(chi2 - dof) <= 3.0 * std::sqrt(2.0 * dof);

    Rng prop(1234);
    double shift_err = 0.0;
    bool dominance = true;
    for (int c = 0; c < 2000; ++c) {
        std::vector<double> u(2 + c % 6);
        for (auto& v : u) v = uniform(prop, -10.0, 10.0);
        const double temp = uniform(prop, 0.1, 3.0);
        const double shift = uniform(prop, -500.0, 500.0);
        auto shifted = u;
        for (auto& v : shifted) v += shift;
        const auto p = selection_probabilities(u, temp);
        const auto q = selection_probabilities(shifted, temp);
        for (std::size_t i = 0; i < u.size(); ++i) shift_err = std::max(shift_err, std::abs(p[i] - q[i]));
        const auto best = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (p[i] > p[best] + 1e-12) dominance = false;
            // higher utility never gets lower probability
            for (std::size_t j = 0; j < u.size(); ++j)
                if (u[i] > u[j] && p[i] + 1e-12 < p[j]) dominance = false;
        }
    }
    verdict("softmax properties", uniform_ok && shift_err <= 1e-12 && dominance,
            "chi2 " + num(chi2) + " (dof 3, 3 sigma " + num(3.0 * std::sqrt(2.0 * dof)) + "), shift error " +
                num(shift_err) + ", argmax dominance " + (dominance ? "holds" : "violated"));
}

void td_contraction()
{
    const double alpha = 0.2, r = -2.5;
    double u = 10.0;
    double worst = 0.0;
    bool ok = true;
    for (int step = 0; step < 100; ++step) {
        const double next = td_update(u, r, alpha, UtilityPrecision::double_precision);
        const double expect = (1.0 - alpha) * std::abs(u - r);
        const double got = std::abs(next - r);
        // a handful of roundings on operands of size |u| + |r|
        const double bound = 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(u) + std::abs(r));
        worst = std::max(worst, std::abs(got - expect));
        if (std::abs(got - expect) > bound) ok = false;
        u = next;
    }
    verdict("TD contraction", ok,
            "100 steps, max deviation from (1-alpha) contraction " + num(worst) + " within rounding bound");
}

void learning_progression(const BatchResult& batch, double secs)
{
    const auto p = progression_stats(batch.outcomes);
    const int last = p.trials.back();
    const double early = strategy_share(batch.outcomes, 2, 1, 3);
    const double late = strategy_share(batch.outcomes, 2, 13, last);
    const bool ordinal = p.ordinal.has_value();
    const bool ok = p.ols_slope > 0.0 && ordinal && p.ordinal->slope > 0.0 &&
                    p.ordinal->thresholds[0] < p.ordinal->thresholds[1] && late > early && secs < 30.0;
    std::string detail = std::to_string(batch.outcomes.size()) + " outcomes, OLS slope " + num(p.ols_slope);
    if (ordinal) {
        detail += ", ordered-logit slope " + num(p.ordinal->slope) + ", thresholds " + num(p.ordinal->thresholds[0]) +
                  " < " + num(p.ordinal->thresholds[1]);
    } else {
        detail += ", ordered logit unavailable: " + p.ordinal_note;
    }
    detail += ", expert share " + num(late) + " (13+) vs " + num(early) + " (1-3), " + num(secs) + " s";
    verdict("learning progression", ok, detail);
}

void chance_baseline_rows(const std::string& root)
{
    double nll[2] = {0.0, 0.0};
    const FacetMode modes[2] = {FacetMode::single, FacetMode::multi};
    for (int i = 0; i < 2; ++i) {
        PipelineConfig c;
        c.sets = 2;
        c.runs = 2;
        c.folds = 3;
        c.mode = modes[i];
        const std::string dir = root + "/chance-" + std::string(facet_name(modes[i]));
        run_pipeline(c, dir);
        const auto report = parse_report_json(io::read_file(dir + "/eval/report.json"));
        if (report.rows.empty() || report.rows[0].label != kChanceLabel || !report.rows[0].nll) {
            verdict("chance baseline", false, "report has no chance row");
            return;
        }
        nll[i] = *report.rows[0].nll;
    }
    const bool ok = std::abs(nll[0] - 0.6931) <= 1e-4 && std::abs(nll[1] - std::log(6.0)) <= 1e-4;
    verdict("chance baseline", ok, "binary " + num(nll[0]) + ", 6-class " + num(nll[1]));
}

void probe_sanity()
{
    const auto s = testsupport::separable_set();
    ProbeOptions opt;
    opt.folds = 10;
    const auto r = fit_probe(s.x, s.y, 2, opt);

    const double h = 1e-5;
    double worst = 0.0;
    for (int classes : {2, 3, 6}) {
        std::vector<int> y(s.y.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
        const ProbeObjective obj(s.x, y, classes, 1.0);
        Rng rng(static_cast<std::uint64_t>(classes));
        Vector theta(obj.parameter_count());
        for (auto& v : theta) v = uniform(rng, -1.0, 1.0);
        Vector g;
        obj.value_and_gradient(theta, g);
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Vector a = theta, b = theta;
            a[k] += h;
            b[k] -= h;
            const double fd = (obj.value(a) - obj.value(b)) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-6}));
        }
    }
    verdict("probe sanity", r.mean_accuracy >= 0.95 && r.mean_nll <= 0.2 && worst <= 1e-4,
            "10-fold accuracy " + num(r.mean_accuracy) + ", NLL " + num(r.mean_nll) +
                ", gradient max relative error " + num(worst));
}

void pca_sree()
{
    double worst_val = 0.0, worst_vec = 0.0, worst_rec = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        Matrix x(20, 8);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = standard_normal(rng) * (1.0 + double(j));
        Eigen::VectorXd ov;
        Eigen::MatrixXd ovec;
        testsupport::jacobi_eigen(testsupport::brute_covariance(x), ov, ovec);
        const auto ce = covariance_eigen(x);
        for (Eigen::Index i = 0; i < 8; ++i) {
            worst_val = std::max(worst_val, std::abs(ce.values[i] - ov[i]));
            worst_vec = std::max(worst_vec, std::abs(std::abs(ce.vectors.col(i).dot(ovec.col(i))) - 1.0));
        }
        worst_rec = std::max(worst_rec, (pca_reduce(x, 8).reconstruct() - x).cwiseAbs().maxCoeff());
    }
    const std::vector<double> ev = {4, 3, 2, 1};
    const auto n = sree_component_count(ev, 0.70);
    verdict("PCA/SREE", worst_val <= 1e-8 && worst_vec <= 1e-8 && n == 2 && worst_rec < 1e-8,
            "eigenvalue error " + num(worst_val) + ", eigenvector misalignment " + num(worst_vec) + ", SREE " +
                std::to_string(n) + ", reconstruction error " + num(worst_rec));
}

void prompt_fidelity()
{
    const auto inst = ProblemInstance::base();
    const bool single = render_prompt(inst, FacetMode::single) ==
                        testsupport::read_file(testsupport::fixture_path("prompt_single_base.txt"));
    const bool multi = render_prompt(inst, FacetMode::multi) ==
                       testsupport::read_file(testsupport::fixture_path("prompt_multi_base.txt"));
    verdict("prompt fidelity", single && multi,
            std::string("single ") + (single ? "matches" : "differs") + ", multi " + (multi ? "matches" : "differs"));
}

void pipeline_determinism(const std::string& root)
{
    PipelineConfig c;
    c.sets = 3;
    c.runs = 2;
    c.folds = 4;
    std::vector<std::string> text[2];
    for (int i = 0; i < 2; ++i) {
        const std::string dir = root + "/determinism-" + std::to_string(i);
        const StageManifest ms[] = {stage_simulate(c, dir), stage_distill(c, dir), stage_embed(c, dir),
                                    stage_reduce(c, dir), stage_build_dataset(c, dir), stage_eval(c, dir)};
        for (const auto& m : ms) text[i].push_back(io::read_file(dir + "/" + m.manifest_path));
    }
    verdict("pipeline determinism", text[0] == text[1],
            std::to_string(text[0].size()) + " stage manifests " + (text[0] == text[1] ? "identical" : "differ"));
}

} // namespace

int main()
{
    const std::string root =
        (fs::temp_directory_path() / ("vsmactr-acceptance-" + std::to_string(::getpid()))).string();
    fs::remove_all(root);

    BatchResult batch;
    double batch_secs = 0.0;
    try {
        const auto t0 = Clock::now();
        BatchConfig cfg;
        batch = run_batch(generate_problem_sets(cfg.master_seed, 32), cfg);
        batch_secs = seconds_since(t0);
    } catch (const std::exception& e) {
        std::cout << "default batch failed: " << e.what() << "\n";
    }

    criterion("golden utility arithmetic", golden_arithmetic);
    criterion("worked example", worked_example);
    criterion("trace round trip", [&] { trace_round_trip(batch); });
    criterion("softmax properties", softmax_properties);
    criterion("TD contraction", td_contraction);
    criterion("learning progression", [&] { learning_progression(batch, batch_secs); });
    criterion("chance baseline", [&] { chance_baseline_rows(root); });
    criterion("probe sanity", probe_sanity);
    criterion("PCA/SREE", pca_sree);
    criterion("prompt fidelity", prompt_fidelity);
    criterion("pipeline determinism", [&] { pipeline_determinism(root); });

    fs::remove_all(root);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures;
}
