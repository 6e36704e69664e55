#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vsmactr/engine.hpp"

namespace vsmactr {

/// Two-section line: pre-assembly (section 0) and assembly (section 1).
struct ProblemInstance {
    double ct_pre = 40.0;
    double oee_pre = 0.88;
    double ct_asm = 44.0;
    double oee_asm = 0.801;
    double reduction = 4.0;

    /// 40 s / 88 % pre-assembly, 44 s / 80.1 % assembly, reduce by 4 s.
    static ProblemInstance base() { return {}; }

    double ct(int section) const { return section == 0 ? ct_pre : ct_asm; }
    double oee(int section) const { return section == 0 ? oee_pre : oee_asm; }

    /// Throws Error{invalid_instance}.
    void validate() const;

    friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

enum class Strategy : int { novice = 0, intermediate = 1, expert = 2 };

/// Sector weight w_i = ct_i (1 - oee_i) / sum_j ct_j (1 - oee_j) and defect
/// increase defect_i = kappa * w_i (1 - oee_i) (reduction / ct_i).
struct DefectModel {
    double kappa = 1.0;

    double weight(const ProblemInstance& inst, int section) const;
    double defect_increase(const ProblemInstance& inst, int section, double reduction) const;
};

/// Headcount cost of shortening a cycle: lambda (1/(ct - r) - 1/ct).
/// lambda = 0.02 / (1/36 - 1/40) = 7.2 puts a 40 s -> 36 s cut at 0.02.
struct HeadcountModel {
    double lambda = 7.2;
};

enum class CostClass : int { efficient = 0, inefficient = 1 };

struct RewardModel {
    // [strategy][cost class]
    std::array<std::array<double, 2>, 3> table{{
        {-1.0, -2.0},
        {0.0, 0.0},
        {6.0, 4.0},
    }};
    double cost_threshold = 0.015;

    CostClass classify(double headcount_delta) const
    {
        return headcount_delta > cost_threshold ? CostClass::inefficient : CostClass::efficient;
    }
    /// Throws Error{invalid_argument} if the expert >= intermediate >= novice
    /// ordering is broken for either cost class.
    void validate() const;
};

struct TaskModels {
    DefectModel defect;
    HeadcountModel headcount;
    RewardModel reward;
};

std::pair<double, double> compute_weights(const ProblemInstance& inst, const DefectModel& model = {});
double compute_defect_increase(const ProblemInstance& inst, int section, const DefectModel& model = {});
/// Throws Error{reduction_exceeds_cycle} when reduction >= the section's cycle time.
double compute_headcount_delta(const ProblemInstance& inst, int section, double reduction,
                               const HeadcountModel& model = {});
/// Throws Error{invalid_argument} for a strategy outside 0..2.
double reward_for(int strategy, double headcount_delta, const RewardModel& model = {});

struct DecisionOutcome {
    std::string run_id;
    int set_index = 0;
    int trial_index = 0;
    int section = 0;
    int strategy = 0;
    double reward_received = 0.0;
    double headcount_delta = 0.0;

    friend bool operator==(const DecisionOutcome&, const DecisionOutcome&) = default;
};

/// Productions restricted to one persona drop the other two strategy selectors.
enum class PersonaFilter { all, novice_only, intermediate_only, expert_only };

/// The 18-production VSM rule set. Productions read the problem from the
/// decision chunk in the retrieval buffer (see init_run).
std::vector<Production> build_persona_rules(const ProblemInstance& inst, const TaskModels& models = {},
                                            PersonaFilter filter = PersonaFilter::all);

Chunk make_goal_chunk();
Chunk make_decision_chunk(const ProblemInstance& inst);

/// Loads the problem into the retrieval buffer and sets the goal (traced).
void init_run(Engine& engine, const ProblemInstance& inst);

struct TrialResult {
    DecisionOutcome outcome;
    TraceLog trace;
};

/// One decision round followed by the reward for its (strategy, cost class).
TrialResult run_trial(Engine& engine, const ProblemInstance& inst, const TaskModels& models, const std::string& run_id,
                      int set_index, int trial_index);

enum class BatchMode { adaptive, fixed_persona };

struct BatchConfig {
    int runs_per_set = 4;
    int trials_per_run = 16;
    // end a run one trial early once the expert strategy held for the three
    // trials before the last one (16 -> 15 when trials 13..15 were expert)
    bool stop_when_stable = true;
    std::uint64_t master_seed = 20240601;
    BatchMode mode = BatchMode::adaptive;
    EngineConfig engine;
    TaskModels models;
};

struct RunTrace {
    std::string run_id;
    int set_index = 0;
    int run_index = 0;
    TraceLog log;
};

struct BatchResult {
    std::vector<DecisionOutcome> outcomes;
    std::vector<RunTrace> traces;
};

std::string make_run_id(int set_index, int run_index);

/// Runs every (set, run) with its own engine, rng seeded from
/// derive_seed(master_seed, global run index). Output ordered by (set, run, trial);
/// trials are numbered from 1.
BatchResult run_batch(std::span<const ProblemInstance> problem_sets, const BatchConfig& config);

} // namespace vsmactr
