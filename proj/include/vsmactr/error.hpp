#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsmactr {

enum class Errc {
    invalid_argument,
    // memory
    duplicate_slot,
    missing_required_slot,
    unknown_slot,
    invalid_slot_value,
    buffer_busy,
    // engine
    empty_conflict_set,
    deadlock,
    step_limit_exceeded,
    // task
    invalid_instance,
    reduction_exceeds_cycle,
    // trace codec
    malformed_timestamp,
    truncated_utility_block,
    // feature lab
    provider_unavailable,
    dimension_mismatch,
    all_zero_variance,
    rank_deficient,
    mixed_dims,
    singular_scatter,
    // dataset
    feature_count_mismatch,
    class_too_small,
    io_failure,
    // probe / analysis
    degenerate_fold,
    separation,
    parse_error,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace vsmactr
