#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vsmactr/trace_codec.hpp"
#include "vsmactr/vsm_task.hpp"

namespace vsmactr {

/// Sampling box for generated instances (the base instance is always set 0).
struct ProblemRanges {
    double ct_pre_lo = 36.0, ct_pre_hi = 44.0;
    double ct_asm_lo = 40.0, ct_asm_hi = 48.0;
    double oee_lo = 0.75, oee_hi = 0.92;
    double reduction = 4.0;
};

/// Cycle times are rounded to 0.1 s and OEE to 0.001 so that prompts show
/// the same numbers the model was run on.
std::vector<ProblemInstance> generate_problem_sets(std::uint64_t master_seed, int count = 32,
                                                   const ProblemRanges& ranges = {});

/// One line per instance: ct_pre,oee_pre,ct_asm,oee_asm,reduction (with header).
std::string format_problem_sets(std::span<const ProblemInstance> sets);
std::vector<ProblemInstance> parse_problem_sets(std::string_view text);

/// Prompt templates for the single-facet (section) and multi-facet
/// (section x strategy) targets, with the instance's numbers substituted.
std::string render_prompt(const ProblemInstance& inst, FacetMode mode);

/// Header run_id,trial,section,strategy,reward,headcount_delta.
std::string format_outcomes_csv(std::span<const DecisionOutcome> outcomes);
/// The set index is recovered from the run id ("s07-r2" -> 7).
std::vector<DecisionOutcome> parse_outcomes_csv(std::string_view text);
/// Throws Error{parse_error} for ids not of the form s<set>-r<run>.
std::pair<int, int> parse_run_id(std::string_view run_id);

struct DatasetRecord {
    std::string prompt;
    int target = 0;
    std::optional<std::vector<double>> features;
    std::string run_id;
    int trial = 0;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct SizingReport {
    int classes = 0;
    std::size_t target = 0;
    std::size_t actual = 0;

    bool ok() const noexcept { return actual >= target; }
    /// e.g. "2 classes × 1000 ⇒ target 2000, actual 2012: OK"
    std::string text() const;
};

struct Dataset {
    FacetMode target_mode = FacetMode::single;
    std::vector<DatasetRecord> records;
    SizingReport sizing;
};

inline constexpr std::size_t kRecordsPerClass = 1000;

/// One record per outcome. Prompts come from problem_sets[outcome.set_index];
/// features, when given, must hold one vector per outcome, all the same length.
/// Throws Error{invalid_argument} on empty input or a bad set index and
/// Error{feature_count_mismatch}.
Dataset build_dataset(std::span<const DecisionOutcome> outcomes, std::span<const ProblemInstance> problem_sets,
                      FacetMode prompt_mode, FacetMode target_mode,
                      const std::vector<std::vector<double>>* features = nullptr);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified by target; per-class test counts by largest remainder so the
/// total is round(fraction * n). Indices come back in increasing order.
/// Throws Error{invalid_argument} for fraction outside (0,1) and
/// Error{class_too_small} when a class has fewer than 2 members.
SplitIndices stratified_split(std::span<const int> targets, double test_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

enum class ExportFormat { jsonl, csv };

/// jsonl keys: prompt, target, features (only when present), run_id, trial.
/// csv columns: run_id, trial, target, prompt, f0..f{d-1}.
std::string format_records(std::span<const DatasetRecord> records, ExportFormat fmt);
/// Throws Error{parse_error} / Error{feature_count_mismatch}.
std::vector<DatasetRecord> parse_records(std::string_view text, ExportFormat fmt);
void export_records(std::span<const DatasetRecord> records, ExportFormat fmt, const std::string& path);
std::vector<DatasetRecord> import_records(const std::string& path, ExportFormat fmt);

/// Hyperparameters handed to the external fine-tuning step.
struct FinetuneConfig {
    std::string learning_rate = "1e-5";
    int epochs = 10;
    int batch_size = 5;
    double weight_decay = 0.01;
    double dropout = 0.5;
    int grad_accumulation = 2;
    double max_grad_norm = 1.0;
    double test_split = 0.2;
    std::string loss = "cross-entropy";
    std::string optimizer = "adam";
    std::string adapter = "low-rank";
};

std::string format_finetune_config(const FinetuneConfig& cfg = {});
void emit_finetune_config(const std::string& path, const FinetuneConfig& cfg = {});

} // namespace vsmactr
