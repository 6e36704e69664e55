#include "vsmactr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "vsmactr/csv.hpp"
#include "vsmactr/dataset.hpp"
#include "vsmactr/embedding.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/feature_lab.hpp"
#include "vsmactr/io.hpp"
#include "vsmactr/numfmt.hpp"
#include "vsmactr/probe.hpp"
#include "vsmactr/progression.hpp"
#include "vsmactr/report.hpp"
#include "vsmactr/rng.hpp"

namespace vsmactr {

namespace {

using ojson = nlohmann::ordered_json;

// seed streams for the stages that draw random numbers of their own
constexpr std::uint64_t kSplitStream = 0x5b1e;
constexpr std::uint64_t kFoldStream = 0xf01d;

[[noreturn]] void config_error(const std::string& what) { throw PipelineError(ExitCode::config, what); }

class Stage {
public:
    Stage(std::string command, const PipelineConfig& cfg, std::string out_dir)
        : cfg_(cfg), out_(std::move(out_dir))
    {
        m_.command = std::move(command);
        m_.manifest_path = dir() + "/manifest.json";
    }

    std::string dir() const { return m_.command == "build-dataset" ? "dataset" : m_.command; }
    std::string full(const std::string& rel) const { return out_ + "/" + rel; }
    bool has(const std::string& rel) const { return io::exists(full(rel)); }

    std::string input(const std::string& rel)
    {
        if (!has(rel)) {
            throw PipelineError(ExitCode::missing_input, m_.command + ": missing upstream artifact " + full(rel));
        }
        std::string text = io::read_file(full(rel));
        m_.inputs.push_back({rel, io::sha256_hex(text)});
        return text;
    }

    void output(const std::string& rel, std::string_view content)
    {
        io::write_file(full(rel), content);
        m_.outputs.push_back({rel, io::sha256_hex(content)});
    }

    StageManifest finish()
    {
        ojson j;
        j["command"] = m_.command;
        j["tool_version"] = kToolVersion;
        j["seed"] = cfg_.seed;
        j["config"] = ojson::parse(config_json(cfg_));
        auto list = [](const std::vector<Artifact>& v) {
            ojson a = ojson::array();
            for (const auto& x : v) a.push_back(ojson{{"path", x.path}, {"sha256", x.sha256}});
            return a;
        };
        j["inputs"] = list(m_.inputs);
        j["outputs"] = list(m_.outputs);
        io::write_file(full(m_.manifest_path), j.dump(2) + "\n");
        return m_;
    }

private:
    const PipelineConfig& cfg_;
    std::string out_;
    StageManifest m_;
};

std::vector<std::string> run_ids_in_order(std::span<const DecisionOutcome> outcomes)
{
    std::vector<std::string> ids;
    for (const auto& o : outcomes) {
        if (ids.empty() || ids.back() != o.run_id) ids.push_back(o.run_id);
    }
    return ids;
}

std::string trace_path(const std::string& run_id) { return "simulate/traces/" + run_id + ".txt"; }

using TrialKey = std::pair<std::string, int>;

struct TrialLines {
    std::map<TrialKey, std::vector<std::size_t>> ids;
};

std::string format_trial_lines(const std::vector<std::pair<TrialKey, std::vector<std::size_t>>>& rows)
{
    std::string out = csv::format_row({"run_id", "trial", "lines"});
    for (const auto& [key, ids] : rows) {
        std::string joined;
        for (auto id : ids) {
            if (!joined.empty()) joined += ' ';
            joined += std::to_string(id);
        }
        out += csv::format_row({key.first, std::to_string(key.second), joined});
    }
    return out;
}

TrialLines parse_trial_lines(std::string_view text, std::size_t line_count)
{
    const auto rows = csv::parse(text);
    if (rows.empty() || rows[0] != csv::Row{"run_id", "trial", "lines"}) {
        throw Error(Errc::parse_error, "trial_lines.csv: wrong header");
    }
    TrialLines t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 3) throw Error(Errc::parse_error, "trial_lines.csv: 3 fields expected");
        const auto trial = numfmt::parse_int(r[1]);
        if (!trial) throw Error(Errc::parse_error, "trial_lines.csv: bad trial '" + r[1] + "'");
        std::vector<std::size_t> ids;
        std::istringstream in(r[2]);
        std::string tok;
        while (in >> tok) {
            const auto v = numfmt::parse_int(tok);
            if (!v || *v < 0 || static_cast<std::size_t>(*v) >= line_count) {
                throw Error(Errc::parse_error, "trial_lines.csv: bad line id '" + tok + "'");
            }
            ids.push_back(static_cast<std::size_t>(*v));
        }
        if (ids.empty()) throw Error(Errc::parse_error, "trial_lines.csv: trial without lines");
        t.ids[{r[0], static_cast<int>(*trial)}] = std::move(ids);
    }
    return t;
}

const std::vector<std::size_t>& lines_of(const TrialLines& t, const DecisionOutcome& o)
{
    auto it = t.ids.find({o.run_id, o.trial_index});
    if (it == t.ids.end()) {
        throw Error(Errc::feature_count_mismatch, "no trace lines for " + o.run_id + " trial " +
                                                      std::to_string(o.trial_index));
    }
    return it->second;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& ids)
{
    Matrix out(static_cast<Eigen::Index>(ids.size()), m.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(ids[i]));
    return out;
}

// Embeds in slices so a bridge never receives one enormous request.
EmbeddingMatrix embed_all(EmbeddingProvider& p, const std::vector<std::string>& texts, EmbedKind kind)
{
    constexpr std::size_t kChunk = 256;
    EmbeddingMatrix all;
    for (std::size_t start = 0; start < texts.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, texts.size() - start);
        auto part = embed_lines(p, std::span<const std::string>(texts).subspan(start, n), kind);
        if (start == 0) {
            all.values.resize(static_cast<Eigen::Index>(texts.size()), part.dim());
        } else if (part.dim() != all.values.cols()) {
            throw Error(Errc::dimension_mismatch, "provider changed dimension between requests");
        }
        all.values.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = part.values;
        all.provenance = part.provenance;
    }
    return all;
}

int declared_classes(FacetMode m) { return m == FacetMode::single ? 2 : 6; }

template <typename F>
auto as_provider_stage(F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == Errc::provider_unavailable || e.code() == Errc::dimension_mismatch) {
            throw PipelineError(ExitCode::provider, e.what());
        }
        throw;
    }
}

} // namespace

PipelineConfig apply_config_json(PipelineConfig c, std::string_view json_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) config_error("config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "sets") c.sets = v.get<int>();
            else if (key == "runs") c.runs = v.get<int>();
            else if (key == "trials") c.trials = v.get<int>();
            else if (key == "stop_when_stable") c.stop_when_stable = v.get<bool>();
            else if (key == "batch_mode") c.batch_mode = v.get<std::string>();
            else if (key == "alpha") c.alpha = v.get<double>();
            else if (key == "noise_s") c.noise_s = v.get<double>();
            else if (key == "mode") c.mode = parse_facet(v.get<std::string>());
            else if (key == "provider") c.provider = v.get<std::string>();
            else if (key == "threshold") c.threshold = v.get<double>();
            else if (key == "folds") c.folds = v.get<int>();
            else if (key == "lambda") c.lambda = v.get<double>();
            else if (key == "test_split") c.test_split = v.get<double>();
            else config_error("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        config_error(std::string("bad config value: ") + e.what());
    } catch (const Error& e) {
        config_error(e.what());
    }
    return c;
}

void validate(const PipelineConfig& c)
{
    if (c.sets < 1 || c.runs < 1 || c.trials < 1) config_error("sets, runs and trials must be >= 1");
    if (c.batch_mode != "adaptive" && c.batch_mode != "fixed_persona") {
        config_error("batch_mode must be adaptive or fixed_persona");
    }
    if (!(c.threshold > 0.0 && c.threshold <= 1.0)) config_error("threshold must be in (0, 1]");
    if (c.folds < 2) config_error("folds must be >= 2");
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) config_error("lambda must be >= 0");
    if (!(c.test_split > 0.0 && c.test_split < 1.0)) config_error("test_split must be in (0, 1)");
    EngineConfig ec;
    ec.alpha = c.alpha;
    ec.noise_s = c.noise_s;
    try {
        ec.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
}

std::string config_json(const PipelineConfig& c)
{
    ojson j;
    j["seed"] = c.seed;
    j["sets"] = c.sets;
    j["runs"] = c.runs;
    j["trials"] = c.trials;
    j["stop_when_stable"] = c.stop_when_stable;
    j["batch_mode"] = c.batch_mode;
    j["alpha"] = c.alpha;
    j["noise_s"] = c.noise_s;
    j["mode"] = facet_name(c.mode);
    j["provider"] = c.provider;
    j["threshold"] = c.threshold;
    j["folds"] = c.folds;
    j["lambda"] = c.lambda;
    j["test_split"] = c.test_split;
    return j.dump();
}

StageManifest stage_simulate(const PipelineConfig& cfg, const std::string& out_dir)
{
    validate(cfg);
    Stage st("simulate", cfg, out_dir);
    const auto sets = generate_problem_sets(cfg.seed, cfg.sets);
    BatchConfig bc;
    bc.runs_per_set = cfg.runs;
    bc.trials_per_run = cfg.trials;
    bc.stop_when_stable = cfg.stop_when_stable;
    bc.master_seed = cfg.seed;
    bc.mode = cfg.batch_mode == "adaptive" ? BatchMode::adaptive : BatchMode::fixed_persona;
    bc.engine.alpha = cfg.alpha;
    bc.engine.noise_s = cfg.noise_s;
    BatchResult batch;
    try {
        batch = run_batch(sets, bc);
    } catch (const Error& e) {
        throw PipelineError(ExitCode::engine, std::string("simulation failed: ") + e.what());
    }
    for (const auto& t : batch.traces) {
        const auto problems = audit_utility_updates(t.log);
        if (!problems.empty()) {
            throw PipelineError(ExitCode::engine, t.run_id + ": utility audit failed: " + problems.front());
        }
    }
    st.output("simulate/problem_sets.csv", format_problem_sets(sets));
    st.output("simulate/outcomes.csv", format_outcomes_csv(batch.outcomes));
    for (const auto& t : batch.traces) st.output(trace_path(t.run_id), emit_string(t.log));
    return st.finish();
}

StageManifest stage_distill(const PipelineConfig& cfg, const std::string& out_dir)
{
    Stage st("distill", cfg, out_dir);
    const auto outcomes = parse_outcomes_csv(st.input("simulate/outcomes.csv"));
    st.output("distill/selected.csv", format_selected_csv(distill_selected(outcomes, cfg.mode)));
    return st.finish();
}

StageManifest stage_embed(const PipelineConfig& cfg, const std::string& out_dir)
{
    Stage st("embed", cfg, out_dir);
    const auto outcomes = parse_outcomes_csv(st.input("simulate/outcomes.csv"));
    const auto sets = parse_problem_sets(st.input("simulate/problem_sets.csv"));

    std::vector<std::string> distinct;
    std::map<std::string, std::size_t> index;
    std::vector<std::pair<TrialKey, std::vector<std::size_t>>> rows;
    for (const auto& run_id : run_ids_in_order(outcomes)) {
        const auto rounds = split_trials(parse_string(st.input(trace_path(run_id))));
        std::vector<int> trials;
        for (const auto& o : outcomes)
            if (o.run_id == run_id) trials.push_back(o.trial_index);
        if (rounds.size() != trials.size()) {
            throw Error(Errc::parse_error, run_id + ": trace has " + std::to_string(rounds.size()) + " rounds but " +
                                               std::to_string(trials.size()) + " outcomes");
        }
        for (std::size_t k = 0; k < rounds.size(); ++k) {
            std::vector<std::size_t> ids;
            for (const auto& line : emit_text(rounds[k])) {
                auto text = strip_time_column(line);
                auto [it, fresh] = index.try_emplace(text, distinct.size());
                if (fresh) distinct.push_back(std::move(text));
                ids.push_back(it->second);
            }
            rows.push_back({{run_id, trials[k]}, std::move(ids)});
        }
    }
    std::vector<std::string> prompts;
    for (const auto& p : sets) prompts.push_back(render_prompt(p, cfg.mode));

    std::unique_ptr<EmbeddingProvider> provider;
    try {
        provider = make_provider(cfg.provider);
    } catch (const Error& e) {
        if (e.code() == Errc::invalid_argument) config_error(e.what());
        throw PipelineError(ExitCode::provider, e.what());
    }
    const auto lines = as_provider_stage([&] { return embed_all(*provider, distinct, EmbedKind::sentence); });
    const auto prompt_vecs = as_provider_stage([&] { return embed_all(*provider, prompts, EmbedKind::prompt_hidden); });

    std::string lines_text;
    for (const auto& l : distinct) lines_text += l + "\n";
    st.output("embed/lines.txt", lines_text);
    st.output("embed/trial_lines.csv", format_trial_lines(rows));
    st.output("embed/line_vectors.matrix", format_matrix_file({lines.values, lines.provenance, {}}));
    st.output("embed/prompts.matrix", format_matrix_file({prompt_vecs.values, prompt_vecs.provenance, {}}));
    return st.finish();
}

StageManifest stage_reduce(const PipelineConfig& cfg, const std::string& out_dir)
{
    validate(cfg);
    Stage st("reduce", cfg, out_dir);
    const auto vectors = parse_matrix_file(st.input("embed/line_vectors.matrix"));
    const auto trial_lines = parse_trial_lines(st.input("embed/trial_lines.csv"), static_cast<std::size_t>(vectors.values.rows()));

    // every occurrence counts, so frequent lines weigh in proportionally
    std::size_t total = 0;
    for (const auto& [key, ids] : trial_lines.ids) total += ids.size();
    Matrix occ(static_cast<Eigen::Index>(total), vectors.values.cols());
    Eigen::Index row = 0;
    for (const auto& [key, ids] : trial_lines.ids)
        for (auto id : ids) occ.row(row++) = vectors.values.row(static_cast<Eigen::Index>(id));

    const auto red = pca_reduce_sree(occ, cfg.threshold);
    Provenance prov = vectors.provenance;
    st.output("reduce/line_scores.matrix", format_matrix_file({red.project(vectors.values), prov, red.explained_ratio}));
    st.output("reduce/loadings.matrix", format_matrix_file({red.loadings, prov, red.explained_ratio}));
    st.output("reduce/mean.matrix", format_matrix_file({red.mean.transpose(), prov, {}}));
    return st.finish();
}

StageManifest stage_build_dataset(const PipelineConfig& cfg, const std::string& out_dir)
{
    validate(cfg);
    Stage st("build-dataset", cfg, out_dir);
    const auto outcomes = parse_outcomes_csv(st.input("simulate/outcomes.csv"));
    const auto sets = parse_problem_sets(st.input("simulate/problem_sets.csv"));
    const auto selected = parse_selected_csv(st.input("distill/selected.csv"));
    const auto scores = parse_matrix_file(st.input("reduce/line_scores.matrix"));
    const auto prompts = parse_matrix_file(st.input("embed/prompts.matrix"));
    const auto trial_lines = parse_trial_lines(st.input("embed/trial_lines.csv"), static_cast<std::size_t>(scores.values.rows()));
    if (selected.mode != cfg.mode) {
        config_error("distill output is " + std::string(facet_name(selected.mode)) + "-facet but --mode is " +
                     std::string(facet_name(cfg.mode)));
    }
    if (prompts.values.rows() != static_cast<Eigen::Index>(sets.size())) {
        throw Error(Errc::feature_count_mismatch, "prompt matrix rows do not match problem sets");
    }

    std::vector<Matrix> blocks;
    blocks.reserve(outcomes.size());
    for (const auto& o : outcomes) blocks.push_back(gather_rows(scores.values, lines_of(trial_lines, o)));
    const auto padded = pad_and_impute(blocks);
    std::vector<std::vector<double>> features;
    features.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const Vector prompt = prompts.values.row(outcomes[i].set_index).transpose();
        const Vector f = flatten_and_concat(padded.blocks[i], prompt, true);
        features.emplace_back(f.data(), f.data() + f.size());
    }
    const auto ds = build_dataset(outcomes, sets, cfg.mode, cfg.mode, &features);
    if (selected.records.size() != ds.records.size()) {
        throw Error(Errc::feature_count_mismatch, "distilled targets and outcomes differ in count");
    }
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        if (selected.records[i].run_id != ds.records[i].run_id || selected.target(i) != ds.records[i].target) {
            throw Error(Errc::feature_count_mismatch, "distilled target " + std::to_string(i) + " disagrees with outcomes");
        }
    }
    const auto [train, test] = split(ds, cfg.test_split, derive_seed(cfg.seed, kSplitStream));
    st.output("dataset/records.jsonl", format_records(ds.records, ExportFormat::jsonl));
    st.output("dataset/train.jsonl", format_records(train.records, ExportFormat::jsonl));
    st.output("dataset/test.jsonl", format_records(test.records, ExportFormat::jsonl));
    st.output("dataset/sizing.txt", ds.sizing.text() + "\n");
    FinetuneConfig ft;
    ft.test_split = cfg.test_split;
    st.output("dataset/finetune.cfg", format_finetune_config(ft));
    return st.finish();
}

StageManifest stage_eval(const PipelineConfig& cfg, const std::string& out_dir)
{
    validate(cfg);
    Stage st("eval", cfg, out_dir);
    const auto records = parse_records(st.input("dataset/records.jsonl"), ExportFormat::jsonl);
    if (records.empty() || !records.front().features) {
        throw Error(Errc::feature_count_mismatch, "dataset records carry no features");
    }
    const int classes = declared_classes(cfg.mode);
    const auto dim = static_cast<Eigen::Index>(records.front().features->size());
    Matrix x(static_cast<Eigen::Index>(records.size()), dim);
    std::vector<int> y;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.features || static_cast<Eigen::Index>(r.features->size()) != dim) {
            throw Error(Errc::feature_count_mismatch, "record " + std::to_string(i) + " has a different feature length");
        }
        if (r.target < 0 || r.target >= classes) {
            throw Error(Errc::invalid_argument, "target " + std::to_string(r.target) + " outside the " +
                                                    std::string(facet_name(cfg.mode)) + "-facet codes");
        }
        x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(r.features->data(), dim).transpose();
        y.push_back(r.target);
    }

    // classes that never occur cannot be fitted; the probe sees the observed ones
    std::set<int> seen(y.begin(), y.end());
    std::map<int, int> compact;
    for (int c : seen) compact.emplace(c, static_cast<int>(compact.size()));
    std::vector<int> yc;
    for (int t : y) yc.push_back(compact.at(t));

    ProbeOptions opt;
    opt.l2_lambda = cfg.lambda;
    opt.folds = cfg.folds;
    opt.seed = derive_seed(cfg.seed, kFoldStream);
    const auto probe = fit_probe(x, yc, static_cast<int>(compact.size()), opt);

    const std::string label = std::string("Probe (") + std::string(facet_name(cfg.mode)) + " facet)";
    const std::vector<ModelResult> models = {{label, probe.mean_nll, probe.mean_accuracy, probe.folds}};
    Baselines b;
    b.chance = chance_baseline(y, classes);
    b.untrained_slot = true;
    auto report = build_report("Probe evaluation, " + std::to_string(cfg.folds) + "-fold cross-validation", models, b);
    if (static_cast<int>(compact.size()) < classes) {
        report.rows.back().note = std::to_string(compact.size()) + " of " + std::to_string(classes) + " classes observed";
    }
    for (const auto& f : probe.folds) {
        if (!f.converged) report.verdicts.push_back("fold " + std::to_string(f.fold) + " did not reach the gradient tolerance");
    }
    st.output("eval/report.txt", render_text(report));
    st.output("eval/report.json", render_json(report));
    st.output("eval/metrics.csv", format_metrics_csv(probe.folds));
    return st.finish();
}

StageManifest stage_analyze(const PipelineConfig& cfg, const std::string& out_dir)
{
    Stage st("analyze", cfg, out_dir);
    const auto outcomes = parse_outcomes_csv(st.input("simulate/outcomes.csv"));
    const auto p = progression_stats(outcomes);

    ojson j;
    j["trials"] = p.trials;
    j["mean_strategy"] = p.mean_strategy;
    j["counts"] = p.counts;
    j["ols_slope"] = p.ols_slope;
    j["ols_intercept"] = p.ols_intercept;
    if (p.ordinal) {
        j["ordered_logit"] = ojson{{"slope", p.ordinal->slope},
                                   {"thresholds", p.ordinal->thresholds},
                                   {"log_likelihood", p.ordinal->log_likelihood},
                                   {"iterations", p.ordinal->iterations},
                                   {"converged", p.ordinal->converged},
                                   {"separation", p.ordinal->separation},
                                   {"diagnostics", p.ordinal->diagnostics}};
    } else {
        j["ordered_logit"] = nullptr;
        j["ordered_logit_note"] = p.ordinal_note;
    }
    std::string text = format_progression(p);
    const int last = p.trials.back();
    if (p.trials.front() <= 3 && last >= 13) {
        const double early = strategy_share(outcomes, 2, 1, 3);
        const double late = strategy_share(outcomes, 2, 13, last);
        j["expert_share_trials_1_3"] = early;
        j["expert_share_trials_13_plus"] = late;
        text += "expert_share_trials_1_3 " + numfmt::shortest(early) + "\n";
        text += "expert_share_trials_13_plus " + numfmt::shortest(late) + "\n";
    }

    // group effect of strategy on the mean reduced trace vector, when available
    if (st.has("reduce/line_scores.matrix") && st.has("embed/trial_lines.csv")) {
        const auto scores = parse_matrix_file(st.input("reduce/line_scores.matrix"));
        const auto tl = parse_trial_lines(st.input("embed/trial_lines.csv"), static_cast<std::size_t>(scores.values.rows()));
        std::array<std::vector<Vector>, 3> by_strategy;
        for (const auto& o : outcomes) {
            by_strategy[static_cast<std::size_t>(o.strategy)].push_back(
                gather_rows(scores.values, lines_of(tl, o)).colwise().mean().transpose());
        }
        std::vector<Matrix> groups;
        for (const auto& g : by_strategy) {
            if (g.empty()) continue;
            Matrix m(static_cast<Eigen::Index>(g.size()), scores.values.cols());
            for (std::size_t i = 0; i < g.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = g[i].transpose();
            groups.push_back(std::move(m));
        }
        try {
            const auto w = wilks_lambda(groups);
            j["wilks"] = ojson{{"lambda", w.lambda}, {"bartlett_chi2", w.bartlett_chi2}, {"dof", w.dof}};
            text += "wilks_lambda " + numfmt::shortest(w.lambda) + " chi2 " + numfmt::shortest(w.bartlett_chi2) +
                    " dof " + std::to_string(w.dof) + "\n";
        } catch (const Error& e) {
            j["wilks"] = ojson{{"error", e.what()}};
            text += std::string("wilks_lambda unavailable: ") + e.what() + "\n";
        }
    }
    st.output("analyze/progression.txt", text);
    st.output("analyze/progression.json", j.dump(2) + "\n");
    return st.finish();
}

std::vector<StageManifest> run_pipeline(const PipelineConfig& cfg, const std::string& out_dir)
{
    return {stage_simulate(cfg, out_dir), stage_distill(cfg, out_dir),       stage_embed(cfg, out_dir),
            stage_reduce(cfg, out_dir),   stage_build_dataset(cfg, out_dir), stage_eval(cfg, out_dir),
            stage_analyze(cfg, out_dir)};
}

StageManifest read_manifest(const std::string& out_dir, const std::string& manifest_path)
{
    try {
        const auto j = nlohmann::json::parse(io::read_file(out_dir + "/" + manifest_path));
        StageManifest m;
        m.command = j.at("command").get<std::string>();
        m.manifest_path = manifest_path;
        for (const auto& a : j.at("inputs")) m.inputs.push_back({a.at("path"), a.at("sha256")});
        for (const auto& a : j.at("outputs")) m.outputs.push_back({a.at("path"), a.at("sha256")});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, manifest_path + ": " + e.what());
    }
}

} // namespace vsmactr
