#include "vsmactr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "vsmactr/csv.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/io.hpp"
#include "vsmactr/numfmt.hpp"
#include "vsmactr/rng.hpp"

namespace vsmactr {

namespace {

double quantize(double v, double step) { return std::round(v / step) * step; }

double field_double(const std::string& s, const char* what)
{
    auto v = numfmt::parse_double(s);
    if (!v) throw Error(Errc::parse_error, std::string("bad ") + what + " '" + s + "'");
    return *v;
}

int field_int(const std::string& s, const char* what)
{
    auto v = numfmt::parse_int(s);
    if (!v || *v < INT32_MIN || *v > INT32_MAX) throw Error(Errc::parse_error, std::string("bad ") + what + " '" + s + "'");
    return static_cast<int>(*v);
}

void expect_header(const std::vector<csv::Row>& rows, const csv::Row& header, const char* what)
{
    if (rows.empty() || rows.front() != header) {
        throw Error(Errc::parse_error, std::string(what) + ": missing or wrong header");
    }
}

std::string pct(double oee) { return numfmt::trimmed_fixed(oee * 100.0, 1); }
std::string secs(double s) { return numfmt::trimmed_fixed(s, 1); }

constexpr const char* kSingleTemplate =
    "Our manufacturing line has two sections with potential defect sources: pre-assembly (0) and assembly (1). "
    "Pre-assembly takes {CT1} seconds with an Overall Equipment Effectiveness(OEE) rate of {OEE1}%, while assembly "
    "takes {CT2} seconds with an OEE rate of {OEE2}%. To reduce total assembly time by {RED} seconds, we need to "
    "identify which section can be shortened with minimal defect increase. It's important to note that reducing "
    "cycle time will also lead to an increase in line headcount costs. There are two options: reduce pre-assembly "
    "time (0) or reduce assembly time (1).\n\n"
    "Question: Which section do you choose to optimize?\n\n"
    "Answer:";

constexpr const char* kMultiTemplate =
    "Our manufacturing line features two sections prone to defects: pre-assembly and assembly. Pre-assembly "
    "requires {CT1} seconds to complete with an Overall Equipment Effectiveness (OEE) rate of {OEE1}%. Assembly "
    "takes {CT2} seconds and has an OEE rate of {OEE2}%. To cut total assembly time by {RED} seconds, we must "
    "decide which section's duration can be reduced with the least increase in defects. Reducing cycle times will "
    "also result in higher line headcount costs. We have three strategy levels for decision-making:\n\n"
    "Novice strategy (targets encoded as 0 for pre-assembly, 3 for assembly): Intuitive choice.\n\n"
    "Intermediate strategy (targets encoded as 1 for pre-assembly, 4 for assembly): Make decision using key "
    "metrics.\n\n"
    "Expert strategy (targets encoded as 2 for pre-assembly, 5 for assembly): make well-informed judgments based "
    "on a comprehensive understanding of all relevant metric.\n\n"
    "Question: Given the different strategy levels, which options would you choose?\n\n"
    "Answer:";

void replace_all(std::string& s, std::string_view key, const std::string& value)
{
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
        s.replace(pos, key.size(), value);
    }
}

} // namespace

std::vector<ProblemInstance> generate_problem_sets(std::uint64_t master_seed, int count, const ProblemRanges& r)
{
    if (count < 1) throw Error(Errc::invalid_argument, "problem set count must be >= 1");
    std::vector<ProblemInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    out.push_back(ProblemInstance::base());
    Rng rng(derive_seed(master_seed, 0x9b0b1e5ull));
    while (static_cast<int>(out.size()) < count) {
        ProblemInstance p;
        p.ct_pre = quantize(uniform(rng, r.ct_pre_lo, r.ct_pre_hi), 0.1);
        p.oee_pre = quantize(uniform(rng, r.oee_lo, r.oee_hi), 0.001);
        p.ct_asm = quantize(uniform(rng, r.ct_asm_lo, r.ct_asm_hi), 0.1);
        p.oee_asm = quantize(uniform(rng, r.oee_lo, r.oee_hi), 0.001);
        p.reduction = r.reduction;
        p.validate();
        out.push_back(p);
    }
    return out;
}

std::string format_problem_sets(std::span<const ProblemInstance> sets)
{
    std::string out = csv::format_row({"ct_pre", "oee_pre", "ct_asm", "oee_asm", "reduction"});
    for (const auto& p : sets) {
        out += csv::format_row({numfmt::shortest(p.ct_pre), numfmt::shortest(p.oee_pre), numfmt::shortest(p.ct_asm),
                                numfmt::shortest(p.oee_asm), numfmt::shortest(p.reduction)});
    }
    return out;
}

std::vector<ProblemInstance> parse_problem_sets(std::string_view text)
{
    const auto rows = csv::parse(text);
    expect_header(rows, {"ct_pre", "oee_pre", "ct_asm", "oee_asm", "reduction"}, "problem sets");
    std::vector<ProblemInstance> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 5) throw Error(Errc::parse_error, "problem sets row " + std::to_string(i) + ": 5 fields expected");
        ProblemInstance p{field_double(r[0], "ct_pre"), field_double(r[1], "oee_pre"), field_double(r[2], "ct_asm"),
                          field_double(r[3], "oee_asm"), field_double(r[4], "reduction")};
        p.validate();
        out.push_back(p);
    }
    return out;
}

std::string render_prompt(const ProblemInstance& inst, FacetMode mode)
{
    inst.validate();
    std::string s = mode == FacetMode::single ? kSingleTemplate : kMultiTemplate;
    replace_all(s, "{CT1}", secs(inst.ct_pre));
    replace_all(s, "{OEE1}", pct(inst.oee_pre));
    replace_all(s, "{CT2}", secs(inst.ct_asm));
    replace_all(s, "{OEE2}", pct(inst.oee_asm));
    replace_all(s, "{RED}", secs(inst.reduction));
    return s;
}

std::string format_outcomes_csv(std::span<const DecisionOutcome> outcomes)
{
    std::string out = csv::format_row({"run_id", "trial", "section", "strategy", "reward", "headcount_delta"});
    for (const auto& o : outcomes) {
        out += csv::format_row({o.run_id, std::to_string(o.trial_index), std::to_string(o.section),
                                std::to_string(o.strategy), numfmt::shortest(o.reward_received),
                                numfmt::shortest(o.headcount_delta)});
    }
    return out;
}

std::pair<int, int> parse_run_id(std::string_view id)
{
    const auto dash = id.find("-r");
    if (id.size() < 4 || id[0] != 's' || dash == std::string_view::npos) {
        throw Error(Errc::parse_error, "bad run id '" + std::string(id) + "'");
    }
    auto s = numfmt::parse_int(id.substr(1, dash - 1));
    auto r = numfmt::parse_int(id.substr(dash + 2));
    if (!s || !r || *s < 0 || *r < 0) throw Error(Errc::parse_error, "bad run id '" + std::string(id) + "'");
    return {static_cast<int>(*s), static_cast<int>(*r)};
}

std::vector<DecisionOutcome> parse_outcomes_csv(std::string_view text)
{
    const auto rows = csv::parse(text);
    expect_header(rows, {"run_id", "trial", "section", "strategy", "reward", "headcount_delta"}, "outcomes");
    std::vector<DecisionOutcome> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 6) throw Error(Errc::parse_error, "outcomes row " + std::to_string(i) + ": 6 fields expected");
        DecisionOutcome o;
        o.run_id = r[0];
        o.set_index = parse_run_id(r[0]).first;
        o.trial_index = field_int(r[1], "trial");
        o.section = field_int(r[2], "section");
        o.strategy = field_int(r[3], "strategy");
        o.reward_received = field_double(r[4], "reward");
        o.headcount_delta = field_double(r[5], "headcount_delta");
        if (o.section < 0 || o.section > 1 || o.strategy < 0 || o.strategy > 2) {
            throw Error(Errc::parse_error, "outcomes row " + std::to_string(i) + ": code out of range");
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string SizingReport::text() const
{
    return std::to_string(classes) + " classes × " + std::to_string(kRecordsPerClass) + " ⇒ target " +
           std::to_string(target) + ", actual " + std::to_string(actual) + ": " + (ok() ? "OK" : "BELOW TARGET");
}

Dataset build_dataset(std::span<const DecisionOutcome> outcomes, std::span<const ProblemInstance> problem_sets,
                      FacetMode prompt_mode, FacetMode target_mode, const std::vector<std::vector<double>>* features)
{
    if (outcomes.empty()) throw Error(Errc::invalid_argument, "no outcomes");
    if (features) {
        if (features->size() != outcomes.size()) {
            throw Error(Errc::feature_count_mismatch, std::to_string(features->size()) + " feature vectors for " +
                                                          std::to_string(outcomes.size()) + " outcomes");
        }
        for (const auto& f : *features) {
            if (f.size() != features->front().size() || f.empty()) {
                throw Error(Errc::feature_count_mismatch, "feature vectors differ in length");
            }
        }
    }
    const auto selected = distill_selected(outcomes, target_mode);
    std::vector<std::string> prompts(problem_sets.size());
    Dataset ds;
    ds.target_mode = target_mode;
    ds.records.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.set_index < 0 || static_cast<std::size_t>(o.set_index) >= problem_sets.size()) {
            throw Error(Errc::invalid_argument, "outcome " + o.run_id + " refers to unknown problem set " +
                                                    std::to_string(o.set_index));
        }
        auto& prompt = prompts[static_cast<std::size_t>(o.set_index)];
        if (prompt.empty()) prompt = render_prompt(problem_sets[static_cast<std::size_t>(o.set_index)], prompt_mode);
        DatasetRecord r;
        r.prompt = prompt;
        r.target = selected.target(i);
        if (features) r.features = (*features)[i];
        r.run_id = o.run_id;
        r.trial = o.trial_index;
        ds.records.push_back(std::move(r));
    }
    ds.sizing.classes = target_mode == FacetMode::single ? 2 : 6;
    ds.sizing.target = static_cast<std::size_t>(ds.sizing.classes) * kRecordsPerClass;
    ds.sizing.actual = ds.records.size();
    return ds;
}

SplitIndices stratified_split(std::span<const int> targets, double test_fraction, std::uint64_t seed)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(Errc::invalid_argument, "test fraction must be in (0, 1)");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < targets.size(); ++i) by_class[targets[i]].push_back(i);
    for (const auto& [c, idx] : by_class) {
        if (idx.size() < 2) {
            throw Error(Errc::class_too_small, "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                                   " member(s)");
        }
    }
    // largest remainder allocation of round(f * n) test slots
    const auto total = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(targets.size())));
    struct Quota {
        int cls;
        std::size_t n;
        double rem;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [c, idx] : by_class) {
        const double exact = test_fraction * static_cast<double>(idx.size());
        const auto fl = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({c, fl, exact - static_cast<double>(fl)});
        assigned += fl;
    }
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return quotas[a].rem > quotas[b].rem; });
    for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
        auto& q = quotas[order[k]];
        if (q.n + 1 < by_class[q.cls].size()) {
            ++q.n;
            ++assigned;
        }
    }

    SplitIndices out;
    for (const auto& q : quotas) {
        auto idx = by_class[q.cls];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(q.cls))));
        shuffle(idx, rng);
        const std::size_t n_test = std::min(q.n, idx.size() - 1);
        out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed)
{
    std::vector<int> targets;
    targets.reserve(ds.records.size());
    for (const auto& r : ds.records) targets.push_back(r.target);
    const auto idx = stratified_split(targets, test_fraction, seed);
    Dataset train, test;
    train.target_mode = test.target_mode = ds.target_mode;
    for (auto i : idx.train) train.records.push_back(ds.records[i]);
    for (auto i : idx.test) test.records.push_back(ds.records[i]);
    for (auto* d : {&train, &test}) {
        d->sizing = ds.sizing;
        d->sizing.actual = d->records.size();
    }
    return {std::move(train), std::move(test)};
}

std::string format_records(std::span<const DatasetRecord> records, ExportFormat fmt)
{
    std::string out;
    if (fmt == ExportFormat::jsonl) {
        for (const auto& r : records) {
            nlohmann::ordered_json j;
            j["prompt"] = r.prompt;
            j["target"] = r.target;
            if (r.features) j["features"] = *r.features;
            j["run_id"] = r.run_id;
            j["trial"] = r.trial;
            out += j.dump();
            out += '\n';
        }
        return out;
    }
    std::size_t dim = 0;
    for (const auto& r : records) {
        if (r.features) {
            dim = r.features->size();
            break;
        }
    }
    for (const auto& r : records) {
        if ((r.features ? r.features->size() : 0) != dim) {
            throw Error(Errc::feature_count_mismatch, "csv export needs every record to have " + std::to_string(dim) +
                                                          " features");
        }
    }
    csv::Row header = {"run_id", "trial", "target", "prompt"};
    for (std::size_t k = 0; k < dim; ++k) header.push_back("f" + std::to_string(k));
    out += csv::format_row(header);
    for (const auto& r : records) {
        csv::Row row = {r.run_id, std::to_string(r.trial), std::to_string(r.target), r.prompt};
        if (r.features) {
            for (double v : *r.features) row.push_back(numfmt::shortest(v));
        }
        out += csv::format_row(row);
    }
    return out;
}

std::vector<DatasetRecord> parse_records(std::string_view text, ExportFormat fmt)
{
    std::vector<DatasetRecord> out;
    if (fmt == ExportFormat::jsonl) {
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                DatasetRecord r;
                r.prompt = j.at("prompt").get<std::string>();
                r.target = j.at("target").get<int>();
                if (j.contains("features")) r.features = j.at("features").get<std::vector<double>>();
                r.run_id = j.at("run_id").get<std::string>();
                r.trial = j.at("trial").get<int>();
                out.push_back(std::move(r));
            } catch (const nlohmann::json::exception& e) {
                throw Error(Errc::parse_error, "dataset jsonl line " + std::to_string(n) + ": " + e.what());
            }
        }
        return out;
    }
    const auto rows = csv::parse(text);
    if (rows.empty() || rows[0].size() < 4 || rows[0][0] != "run_id" || rows[0][1] != "trial" ||
        rows[0][2] != "target" || rows[0][3] != "prompt") {
        throw Error(Errc::parse_error, "dataset csv: missing or wrong header");
    }
    const std::size_t dim = rows[0].size() - 4;
    for (std::size_t k = 0; k < dim; ++k) {
        if (rows[0][4 + k] != "f" + std::to_string(k)) throw Error(Errc::parse_error, "dataset csv: bad feature column");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != rows[0].size()) {
            throw Error(Errc::feature_count_mismatch, "dataset csv row " + std::to_string(i) + " has " +
                                                          std::to_string(row.size()) + " fields");
        }
        DatasetRecord r;
        r.run_id = row[0];
        r.trial = field_int(row[1], "trial");
        r.target = field_int(row[2], "target");
        r.prompt = row[3];
        if (dim > 0) {
            std::vector<double> f(dim);
            for (std::size_t k = 0; k < dim; ++k) f[k] = field_double(row[4 + k], "feature");
            r.features = std::move(f);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void export_records(std::span<const DatasetRecord> records, ExportFormat fmt, const std::string& path)
{
    io::write_file(path, format_records(records, fmt));
}

std::vector<DatasetRecord> import_records(const std::string& path, ExportFormat fmt)
{
    return parse_records(io::read_file(path), fmt);
}

std::string format_finetune_config(const FinetuneConfig& c)
{
    std::ostringstream os;
    os << "# hyperparameters for the external low-rank adapter fine-tuning step\n";
    os << "learning_rate=" << c.learning_rate << '\n';
    os << "epochs=" << c.epochs << '\n';
    os << "batch_size=" << c.batch_size << '\n';
    os << "weight_decay=" << numfmt::shortest(c.weight_decay) << '\n';
    os << "dropout=" << numfmt::shortest(c.dropout) << '\n';
    os << "grad_accumulation=" << c.grad_accumulation << '\n';
    os << "max_grad_norm=" << numfmt::lisp_double(c.max_grad_norm) << '\n';
    os << "test_split=" << numfmt::shortest(c.test_split) << '\n';
    os << "loss=" << c.loss << '\n';
    os << "optimizer=" << c.optimizer << '\n';
    os << "adapter=" << c.adapter << '\n';
    return os.str();
}

void emit_finetune_config(const std::string& path, const FinetuneConfig& cfg)
{
    io::write_file(path, format_finetune_config(cfg));
}

} // namespace vsmactr
