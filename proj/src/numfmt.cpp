#include "vsmactr/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

#include "vsmactr/error.hpp"

namespace vsmactr {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::duplicate_slot: return "DuplicateSlot";
    case Errc::missing_required_slot: return "MissingRequiredSlot";
    case Errc::unknown_slot: return "UnknownSlot";
    case Errc::invalid_slot_value: return "InvalidSlotValue";
    case Errc::buffer_busy: return "BufferBusy";
    case Errc::empty_conflict_set: return "EmptyConflictSet";
    case Errc::deadlock: return "Deadlock";
    case Errc::step_limit_exceeded: return "StepLimitExceeded";
    case Errc::invalid_instance: return "InvalidInstance";
    case Errc::reduction_exceeds_cycle: return "ReductionExceedsCycle";
    case Errc::malformed_timestamp: return "MalformedTimestamp";
    case Errc::truncated_utility_block: return "TruncatedUtilityBlock";
    case Errc::provider_unavailable: return "ProviderUnavailable";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::all_zero_variance: return "AllZeroVariance";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::mixed_dims: return "MixedDims";
    case Errc::singular_scatter: return "SingularScatter";
    case Errc::feature_count_mismatch: return "FeatureCountMismatch";
    case Errc::class_too_small: return "ClassTooSmall";
    case Errc::io_failure: return "IoFailure";
    case Errc::degenerate_fold: return "DegenerateFold";
    case Errc::separation: return "Separation";
    case Errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

namespace numfmt {

namespace {

template <typename T>
std::string to_shortest(T v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string add_point(std::string s)
{
    if (s.find_first_of(".eEni") == std::string::npos) {
        s += ".0";
    }
    return s;
}

} // namespace

std::string lisp_float(float v) { return add_point(to_shortest(v)); }

std::string lisp_double(double v) { return add_point(to_shortest(v)); }

std::string shortest(double v) { return to_shortest(v); }

std::string trace_number(double v)
{
    const auto f = static_cast<float>(v);
    if (std::isfinite(v) && static_cast<double>(f) == v) {
        return lisp_float(f);
    }
    return lisp_double(v);
}

std::optional<double> parse_trace_number(std::string_view text)
{
    const char* first = text.data();
    const char* last = text.data() + text.size();
    float f = 0.0f;
    auto rf = std::from_chars(first, last, f);
    if (rf.ec == std::errc{} && rf.ptr == last && lisp_float(f) == text) {
        return static_cast<double>(f);
    }
    double d = 0.0;
    auto rd = std::from_chars(first, last, d);
    if (rd.ec != std::errc{} || rd.ptr != last) {
        return std::nullopt;
    }
    return d;
}

std::optional<double> parse_double(std::string_view text)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(std::string_view text)
{
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::string seconds3(SimTime t)
{
    const std::int64_t ms = t.ms;
    char buf[48];
    if (ms < 0) {
        std::snprintf(buf, sizeof buf, "-%lld.%03lld", static_cast<long long>(-ms / 1000),
                      static_cast<long long>(-ms % 1000));
    } else {
        std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(ms / 1000),
                      static_cast<long long>(ms % 1000));
    }
    return buf;
}

std::optional<SimTime> parse_seconds3(std::string_view text)
{
    const auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || text.size() - dot - 1 != 3) {
        return std::nullopt;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    auto w = text.substr(0, dot);
    auto f = text.substr(dot + 1);
    for (char c : w) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    for (char c : f) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    std::from_chars(w.data(), w.data() + w.size(), whole);
    std::from_chars(f.data(), f.data() + f.size(), frac);
    return SimTime::from_ms(whole * 1000 + frac);
}

std::string trimmed_fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

} // namespace numfmt
} // namespace vsmactr
