#include "vsmactr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "vsmactr/csv.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

std::string fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

// display width for the table; multi-byte UTF-8 counts once per code point
std::size_t width_of(const std::string& s)
{
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad_text(const std::string& s, std::size_t width)
{
    const auto w = width_of(s);
    return w < width ? s + std::string(width - w, ' ') : s;
}

std::string verdict(const std::string& model, double m_nll, double m_acc, const std::string& base, double b_nll,
                    double b_acc)
{
    const char* nll_word = m_nll < b_nll ? "lower" : m_nll > b_nll ? "higher" : "equal";
    const char* acc_word = m_acc > b_acc ? "higher" : m_acc < b_acc ? "lower" : "equal";
    return model + " vs " + base + ": NLL " + nll_word + " (" + fixed(m_nll, 4) + " vs " + fixed(b_nll, 4) +
           "), accuracy " + acc_word + " (" + fixed(m_acc, 4) + " vs " + fixed(b_acc, 4) + ")";
}

nlohmann::json opt_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_opt(const nlohmann::json& j, const char* key)
{
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

} // namespace

EvalReport build_report(std::string title, std::span<const ModelResult> models, const Baselines& baselines)
{
    EvalReport r;
    r.title = std::move(title);
    if (baselines.chance) r.rows.push_back({kChanceLabel, baselines.chance->nll, baselines.chance->accuracy, ""});
    if (baselines.untrained_slot) {
        if (baselines.untrained) {
            r.rows.push_back({kUntrainedLabel, baselines.untrained->nll, baselines.untrained->accuracy, ""});
        } else {
            r.rows.push_back({kUntrainedLabel, std::nullopt, std::nullopt, "unavailable"});
        }
    }
    for (const auto& m : models) {
        r.rows.push_back({m.label, m.nll, m.accuracy, ""});
        r.folds.insert(r.folds.end(), m.folds.begin(), m.folds.end());
        if (baselines.chance) {
            r.verdicts.push_back(verdict(m.label, m.nll, m.accuracy, kChanceLabel, baselines.chance->nll,
                                         baselines.chance->accuracy));
        }
        if (baselines.untrained) {
            r.verdicts.push_back(verdict(m.label, m.nll, m.accuracy, kUntrainedLabel, baselines.untrained->nll,
                                         baselines.untrained->accuracy));
        }
    }
    return r;
}

std::string render_text(const EvalReport& report, int decimals)
{
    std::size_t first = width_of(report.first_column);
    for (const auto& row : report.rows) first = std::max(first, width_of(row.label));
    first += 2;
    const std::size_t num = std::max<std::size_t>(static_cast<std::size_t>(decimals) + 4, 8);

    std::string out;
    if (!report.title.empty()) out += report.title + "\n";
    out += pad_text(report.first_column, first) + pad("NLL", num) + "Accuracy\n";
    out += std::string(first - 2, '-') + "  " + std::string(num - 2, '-') + "  " + std::string(8, '-') + "\n";
    for (const auto& row : report.rows) {
        std::string line = pad_text(row.label, first);
        line += pad(row.nll ? fixed(*row.nll, decimals) : "n/a", num);
        line += row.accuracy ? fixed(*row.accuracy, decimals) : "n/a";
        if (!row.note.empty()) line += "  (" + row.note + ")";
        out += line + "\n";
    }
    for (const auto& v : report.verdicts) out += v + "\n";
    return out;
}

std::string render_json(const EvalReport& report)
{
    nlohmann::ordered_json j;
    j["title"] = report.title;
    j["first_column"] = report.first_column;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json r;
        r["label"] = row.label;
        r["nll"] = opt_number(row.nll);
        r["accuracy"] = opt_number(row.accuracy);
        r["note"] = row.note;
        j["rows"].push_back(r);
    }
    j["folds"] = nlohmann::json::array();
    for (const auto& f : report.folds) {
        nlohmann::ordered_json r;
        r["fold"] = f.fold;
        r["n_test"] = f.n_test;
        r["nll"] = f.nll;
        r["accuracy"] = f.accuracy;
        r["iterations"] = f.iterations;
        r["converged"] = f.converged;
        j["folds"].push_back(r);
    }
    j["verdicts"] = report.verdicts;
    return j.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        EvalReport r;
        r.title = j.at("title").get<std::string>();
        r.first_column = j.at("first_column").get<std::string>();
        for (const auto& row : j.at("rows")) {
            r.rows.push_back({row.at("label").get<std::string>(), read_opt(row, "nll"), read_opt(row, "accuracy"),
                              row.at("note").get<std::string>()});
        }
        for (const auto& f : j.at("folds")) {
            r.folds.push_back({f.at("fold").get<int>(), f.at("n_test").get<std::size_t>(), f.at("nll").get<double>(),
                               f.at("accuracy").get<double>(), f.at("iterations").get<int>(),
                               f.at("converged").get<bool>()});
        }
        r.verdicts = j.at("verdicts").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("report json: ") + e.what());
    }
}

std::string format_metrics_csv(std::span<const FoldMetrics> folds)
{
    std::string out = csv::format_row({"fold", "nll", "accuracy"});
    for (const auto& f : folds) {
        out += csv::format_row({std::to_string(f.fold), numfmt::shortest(f.nll), numfmt::shortest(f.accuracy)});
    }
    return out;
}

} // namespace vsmactr
