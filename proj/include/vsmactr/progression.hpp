#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsmactr/vsm_task.hpp"

namespace vsmactr {

/// Proportional-odds model P(strategy <= j | trial) = sigmoid(theta_j - slope * trial)
/// for the three strategy levels. A small ridge on the slope keeps the fit
/// finite when the levels are perfectly ordered by trial.
struct OrderedLogit {
    double slope = 0.0;
    std::array<double, 2> thresholds{};
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Levels completely separated by trial (the unpenalized fit would diverge).
    bool separation = false;
    std::string diagnostics;
};

inline constexpr double kOrderedLogitRidge = 1e-2;

/// Throws Error{separation} when a strategy level never occurs (its threshold
/// has no finite estimate) and, with strict, also on complete separation.
/// Throws Error{invalid_argument} for fewer than 2 distinct trials or levels outside 0..2.
OrderedLogit fit_ordered_logit(std::span<const int> trials, std::span<const int> levels, bool strict = false);

struct Progression {
    std::vector<int> trials;            // distinct trial indices, increasing
    std::vector<double> mean_strategy;  // per trial
    std::vector<std::size_t> counts;    // per trial
    double ols_slope = 0.0;
    double ols_intercept = 0.0;
    /// Absent when a strategy level never occurs; see ordinal_note.
    std::optional<OrderedLogit> ordinal;
    std::string ordinal_note;
};

/// Descriptive statistics of strategy code against trial index. Throws
/// Error{invalid_argument} for fewer than 2 distinct trials.
Progression progression_stats(std::span<const DecisionOutcome> outcomes);

/// Fraction of outcomes with trial in [first, last] that used `strategy`.
/// Throws Error{invalid_argument} when no outcome falls in the range.
double strategy_share(std::span<const DecisionOutcome> outcomes, int strategy, int first_trial, int last_trial);

/// Human-readable summary (per-trial table plus fitted coefficients).
std::string format_progression(const Progression& p);

} // namespace vsmactr
