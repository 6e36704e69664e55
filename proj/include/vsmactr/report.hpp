#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsmactr/probe.hpp"

namespace vsmactr {

struct ReportRow {
    std::string label;
    std::optional<double> nll;       // empty when unavailable
    std::optional<double> accuracy;
    std::string note;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvalReport {
    std::string title;
    std::string first_column = "Model";
    std::vector<ReportRow> rows;
    std::vector<FoldMetrics> folds;
    std::vector<std::string> verdicts;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct ModelResult {
    std::string label;
    double nll = 0.0;
    double accuracy = 0.0;
    std::vector<FoldMetrics> folds;
};

struct Baselines {
    std::optional<ChanceBaseline> chance;
    /// Adds the "Untrained" row; it reads "unavailable" unless values are given.
    bool untrained_slot = false;
    std::optional<ChanceBaseline> untrained;
};

inline constexpr const char* kChanceLabel = "Chance-level";
inline constexpr const char* kUntrainedLabel = "Untrained";

/// Baseline rows first, then one row per model; folds are concatenated in
/// model order. A verdict compares each model with each available baseline.
EvalReport build_report(std::string title, std::span<const ModelResult> models, const Baselines& baselines = {});

/// Aligned text table: first column, NLL, Accuracy.
std::string render_text(const EvalReport& report, int decimals = 4);
std::string render_json(const EvalReport& report);
/// Throws Error{parse_error}.
EvalReport parse_report_json(std::string_view text);

/// Header fold,nll,accuracy.
std::string format_metrics_csv(std::span<const FoldMetrics> folds);

} // namespace vsmactr
