// vsmactr: command-line front end for the simulation and probing pipeline.
#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>

#include "vsmactr/error.hpp"
#include "vsmactr/io.hpp"
#include "vsmactr/pipeline.hpp"

using namespace vsmactr;

namespace {

struct Flags {
    std::string out = "out";
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> sets, runs, trials, folds;
    std::optional<std::string> mode, provider, batch_mode;
    std::optional<double> threshold, lambda, test_split, alpha, noise_s;
};

void add_common(CLI::App* sub, Flags& f)
{
    sub->add_option("--out", f.out, "output directory")->capture_default_str();
    sub->add_option("--config", f.config, "JSON config file; flags override it");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--sets", f.sets, "problem sets to simulate");
    sub->add_option("--runs", f.runs, "runs per problem set");
    sub->add_option("--trials", f.trials, "trials per run");
    sub->add_option("--batch-mode", f.batch_mode, "adaptive or fixed_persona");
    sub->add_option("--alpha", f.alpha, "utility learning rate");
    sub->add_option("--noise", f.noise_s, "utility noise scale s");
    sub->add_option("--mode", f.mode, "target facet: single or multi");
    sub->add_option("--provider", f.provider, "embedding provider: test, test:<dim>, bridge, bridge:<command>");
    sub->add_option("--threshold", f.threshold, "cumulative explained-variance threshold");
    sub->add_option("--folds", f.folds, "cross-validation folds");
    sub->add_option("--lambda", f.lambda, "probe L2 strength");
    sub->add_option("--test-split", f.test_split, "held-out fraction");
}

PipelineConfig resolve(const Flags& f)
{
    PipelineConfig c;
    if (!f.config.empty()) {
        if (!io::exists(f.config)) throw PipelineError(ExitCode::config, "config file not found: " + f.config);
        c = apply_config_json(c, io::read_file(f.config));
    }
    if (f.seed) c.seed = *f.seed;
    if (f.sets) c.sets = *f.sets;
    if (f.runs) c.runs = *f.runs;
    if (f.trials) c.trials = *f.trials;
    if (f.batch_mode) c.batch_mode = *f.batch_mode;
    if (f.alpha) c.alpha = *f.alpha;
    if (f.noise_s) c.noise_s = *f.noise_s;
    if (f.mode) {
        try {
            c.mode = parse_facet(*f.mode);
        } catch (const Error& e) {
            throw PipelineError(ExitCode::config, e.what());
        }
    }
    if (f.provider) c.provider = *f.provider;
    if (f.threshold) c.threshold = *f.threshold;
    if (f.folds) c.folds = *f.folds;
    if (f.lambda) c.lambda = *f.lambda;
    if (f.test_split) c.test_split = *f.test_split;
    validate(c);
    return c;
}

void report(const StageManifest& m, const std::string& out)
{
    std::cout << m.command << ": " << m.outputs.size() << " outputs, manifest " << out << "/" << m.manifest_path << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulate strategy learning, build probing datasets and evaluate probes"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    Flags flags;

    using StageFn = StageManifest (*)(const PipelineConfig&, const std::string&);
    const std::vector<std::tuple<std::string, std::string, StageFn>> stages = {
        {"simulate", "run the task batch and write outcomes and traces", stage_simulate},
        {"distill", "select per-trial targets for one facet", stage_distill},
        {"embed", "embed trace lines and prompts", stage_embed},
        {"reduce", "PCA with scree-based component selection", stage_reduce},
        {"build-dataset", "assemble feature records and splits", stage_build_dataset},
        {"eval", "cross-validated linear probe against baselines", stage_eval},
        {"analyze", "learning progression statistics", stage_analyze},
    };
    std::function<int()> action;
    for (const auto& [name, help, fn] : stages) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, flags);
        sub->callback([&, fn = fn] {
            action = [&, fn] {
                const auto cfg = resolve(flags);
                report(fn(cfg, flags.out), flags.out);
                return 0;
            };
        });
    }
    auto* all = app.add_subcommand("run-all", "every stage in order");
    add_common(all, flags);
    all->callback([&] {
        action = [&] {
            const auto cfg = resolve(flags);
            for (const auto& m : run_pipeline(cfg, flags.out)) report(m, flags.out);
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
    }
    try {
        return action();
    } catch (const PipelineError& e) {
        std::cerr << "vsmactr: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "vsmactr: " << e.what() << "\n";
        return static_cast<int>(ExitCode::failure);
    }
}
