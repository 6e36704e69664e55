#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsmactr/trace.hpp"
#include "vsmactr/vsm_task.hpp"

namespace vsmactr {

using TraceText = std::vector<std::string>;

// Layout of timestamped lines: "0.050   PROCEDURAL             PRODUCTION-FIRED X"
inline constexpr std::size_t kTimeColumnWidth = 8;
inline constexpr std::size_t kModuleColumnWidth = 23;

/// One text line per event; a utility update renders as three lines.
TraceText emit_text(const TraceLog& log);
/// emit_text joined with '\n', newline-terminated (empty for an empty log).
std::string emit_string(const TraceLog& log);

/// Inverse of emit_text. Lines that are neither timestamped nor part of a
/// reward block are kept verbatim as OUTPUT events. Untimed events take the
/// time of the closest preceding timestamped line.
/// Throws Error{malformed_timestamp} / Error{truncated_utility_block}.
TraceLog parse_text(std::span<const std::string> lines);
TraceLog parse_string(std::string_view text);

/// Line-delimited JSON, one object per event.
std::string to_jsonl(const TraceLog& log);
TraceLog from_jsonl(std::string_view text);

enum class FacetMode { single, multi };

std::string_view facet_name(FacetMode m) noexcept;
/// Throws Error{invalid_argument} for anything but "single" / "multi".
FacetMode parse_facet(std::string_view s);

/// strategy + 3 * section: 0..2 pre-assembly, 3..5 assembly.
constexpr int compound_code(int section, int strategy) { return strategy + 3 * section; }
constexpr int section_of(int code) { return code / 3; }
constexpr int strategy_of(int code) { return code % 3; }

struct SelectedRecord {
    std::string run_id;
    int trial_index = 0;
    int section_code = 0;
    int strategy_code = 0;
    int compound_code = 0;

    friend bool operator==(const SelectedRecord&, const SelectedRecord&) = default;
};

struct SelectedTrace {
    FacetMode mode = FacetMode::single;
    std::vector<SelectedRecord> records;

    /// Section code (single) or compound code (multi) of record i.
    int target(std::size_t i) const
    {
        return mode == FacetMode::single ? records[i].section_code : records[i].compound_code;
    }
    std::vector<int> targets() const;
};

/// Throws Error{invalid_argument} on empty input or out-of-range codes.
SelectedTrace distill_selected(std::span<const DecisionOutcome> outcomes, FacetMode mode);

/// Header run_id,trial,section,strategy,compound,target; the facet goes in
/// a leading "# mode=<facet>" line.
std::string format_selected_csv(const SelectedTrace& st);
/// Throws Error{parse_error}.
SelectedTrace parse_selected_csv(std::string_view text);

/// Splits a run log into decision rounds: a round ends with the utility
/// updates that follow its reward. Events after the last update form a
/// final partial round.
std::vector<TraceLog> split_trials(const TraceLog& log);

/// Trace line without its time column, as embedded for the holistic trace.
std::string strip_time_column(std::string_view line);

} // namespace vsmactr
