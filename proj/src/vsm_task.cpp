#include "vsmactr/vsm_task.hpp"

#include <cmath>
#include <cstdio>

#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

constexpr const char* kNoviceText = "assembly is always a good place to reduce time!";
constexpr const char* kChooseAssemble = "choose assemble has better stable output!";
constexpr const char* kChoosePreassemble = "choose preassemble has better stable output!";
constexpr const char* kEndOfRound = "this is the end of one decision making";

const char* section_symbol(int section) { return section == 0 ? "pre-assembly" : "assembly"; }

Condition goal_state(const char* state)
{
    return Condition{BufferName::goal, Symbol("state"), Comparator::eq, SlotValue(state)};
}

Condition imaginal_has(const char* slot)
{
    return Condition{BufferName::imaginal, Symbol(slot), Comparator::neq, SlotValue::nil()};
}

Action set_state(const char* state)
{
    return ModifyBuffer{BufferName::goal, Symbol("state"), SlotValue(state)};
}

Action set_retrieval(const char* slot, SlotValue v)
{
    return ModifyBuffer{BufferName::retrieval, Symbol(slot), std::move(v)};
}

Action say(const char* text) { return EmitOutput{std::string(text)}; }

// numbers print the way the Lisp model prints single-floats, followed by a space
Action say_number(std::function<double(const ActionContext&)> fn)
{
    return EmitOutput{TextFn([fn = std::move(fn)](const ActionContext& ctx) {
        return numfmt::lisp_float(static_cast<float>(fn(ctx))) + " ";
    })};
}

ProblemInstance perceived_instance(const ActionContext& ctx)
{
    ProblemInstance p;
    p.ct_pre = ctx.number(BufferName::retrieval, "ct-pre");
    p.ct_asm = ctx.number(BufferName::retrieval, "ct-asm");
    p.oee_pre = ctx.number(BufferName::retrieval, "oee-pre");
    p.oee_asm = ctx.number(BufferName::retrieval, "oee-asm");
    p.reduction = ctx.number(BufferName::retrieval, "reduction-time");
    return p;
}

int chosen_section(const ActionContext& ctx)
{
    const SlotValue v = ctx.slot(BufferName::retrieval, "chosen-section");
    if (v == SlotValue("pre-assembly")) return 0;
    if (v == SlotValue("assembly")) return 1;
    throw Error(Errc::invalid_slot_value, "no section chosen before headcount evaluation");
}

Chunk merits_with(const ActionContext& ctx, const char* slot, double value)
{
    const Chunk* prev = ctx.chunk(BufferName::imaginal);
    std::vector<std::pair<std::string, SlotValue>> slots;
    if (prev && prev->type() == ChunkType::decision_merits) {
        for (const auto& [k, v] : prev->slots()) {
            if (k.str() != slot) slots.emplace_back(k.str(), v);
        }
    }
    slots.emplace_back(slot, SlotValue(value));
    return make_chunk(ChunkType::decision_merits, std::move(slots), "MERITS");
}

Production rule(std::string name, std::vector<Condition> conds, std::vector<Action> acts, double u0 = 0.0)
{
    Production p;
    p.name = std::move(name);
    p.conditions = std::move(conds);
    p.actions = std::move(acts);
    p.initial_utility = u0;
    p.utility = u0;
    return p;
}

} // namespace

void ProblemInstance::validate() const
{
    auto bad = [](const std::string& why) { throw Error(Errc::invalid_instance, why); };
    if (!(ct_pre > 0.0) || !(ct_asm > 0.0)) bad("cycle times must be positive");
    if (!(oee_pre > 0.0 && oee_pre <= 1.0) || !(oee_asm > 0.0 && oee_asm <= 1.0)) bad("OEE must lie in (0,1]");
    if (!(reduction >= 0.0)) bad("reduction must be non-negative");
    if (!(reduction < std::min(ct_pre, ct_asm))) bad("reduction must be below both cycle times");
}

double DefectModel::weight(const ProblemInstance& inst, int section) const
{
    const double pre = inst.ct_pre * (1.0 - inst.oee_pre);
    const double asm_ = inst.ct_asm * (1.0 - inst.oee_asm);
    const double total = pre + asm_;
    if (total == 0.0) return 0.5;
    return (section == 0 ? pre : asm_) / total;
}

double DefectModel::defect_increase(const ProblemInstance& inst, int section, double reduction) const
{
    return kappa * weight(inst, section) * (1.0 - inst.oee(section)) * (reduction / inst.ct(section));
}

void RewardModel::validate() const
{
    for (int c = 0; c < 2; ++c) {
        if (!(table[2][c] >= table[1][c] && table[1][c] >= table[0][c])) {
            throw Error(Errc::invalid_argument, "reward table must satisfy expert >= intermediate >= novice");
        }
    }
}

std::pair<double, double> compute_weights(const ProblemInstance& inst, const DefectModel& model)
{
    inst.validate();
    return {model.weight(inst, 0), model.weight(inst, 1)};
}

double compute_defect_increase(const ProblemInstance& inst, int section, const DefectModel& model)
{
    inst.validate();
    if (section != 0 && section != 1) throw Error(Errc::invalid_argument, "section must be 0 or 1");
    return model.defect_increase(inst, section, inst.reduction);
}

double compute_headcount_delta(const ProblemInstance& inst, int section, double reduction, const HeadcountModel& model)
{
    if (section != 0 && section != 1) throw Error(Errc::invalid_argument, "section must be 0 or 1");
    const double ct = inst.ct(section);
    if (!(reduction < ct)) {
        throw Error(Errc::reduction_exceeds_cycle,
                    "reduction " + numfmt::shortest(reduction) + " >= cycle time " + numfmt::shortest(ct));
    }
    return model.lambda * (1.0 / (ct - reduction) - 1.0 / ct);
}

double reward_for(int strategy, double headcount_delta, const RewardModel& model)
{
    if (strategy < 0 || strategy > 2) throw Error(Errc::invalid_argument, "strategy must be 0, 1 or 2");
    return model.table[static_cast<std::size_t>(strategy)][static_cast<std::size_t>(model.classify(headcount_delta))];
}

Chunk make_goal_chunk()
{
    return make_chunk(ChunkType::goal,
                      {{"state", SlotValue("begin")}, {"section", SlotValue::nil()}, {"comparison", SlotValue::nil()}},
                      "GOER");
}

Chunk make_decision_chunk(const ProblemInstance& inst)
{
    inst.validate();
    return make_chunk(ChunkType::decision,
                      {
                          {"goal", SlotValue("reduce-time")},
                          {"reduction-time", SlotValue(inst.reduction)},
                          {"decision-state", SlotValue("novice")},
                          {"ct-pre", SlotValue(inst.ct_pre)},
                          {"ct-asm", SlotValue(inst.ct_asm)},
                          {"oee-pre", SlotValue(inst.oee_pre)},
                          {"oee-asm", SlotValue(inst.oee_asm)},
                          {"chosen-section", SlotValue::nil()},
                      },
                      "PROBLEM");
}

std::vector<Production> build_persona_rules(const ProblemInstance& inst, const TaskModels& models, PersonaFilter filter)
{
    inst.validate();
    const DefectModel defect = models.defect;
    const HeadcountModel headcount = models.headcount;

    auto chosen_delta = [headcount](const ActionContext& ctx) {
        const auto p = perceived_instance(ctx);
        const int s = chosen_section(ctx);
        return compute_headcount_delta(p, s, p.reduction, headcount);
    };
    auto section_choice = [](int section, int strategy, const char* text) {
        return std::vector<Action>{
            say(text),
            set_retrieval("chosen-section", SlotValue(section_symbol(section))),
            SignalDecision{section, strategy},
        };
    };

    std::vector<Production> rules;
    const bool novice = filter == PersonaFilter::all || filter == PersonaFilter::novice_only;
    const bool intermediate = filter == PersonaFilter::all || filter == PersonaFilter::intermediate_only;
    const bool expert = filter == PersonaFilter::all || filter == PersonaFilter::expert_only;

    rules.push_back(rule("CHOOSE-STRATEGY", {goal_state("begin")}, {set_state("start")}));

    // novice
    if (novice) {
        rules.push_back(rule("DECIDE-BRUTE", {goal_state("start")},
                             {set_state("brute"), set_retrieval("decision-state", SlotValue("novice"))}, 3.0));
    }
    {
        auto acts = section_choice(1, 0, kNoviceText);
        acts.push_back(set_state("recount"));
        rules.push_back(rule("BRUTE-DECISION", {goal_state("brute")}, std::move(acts)));
    }
    rules.push_back(rule("REHEADCOUNT", {goal_state("recount")}, {say_number(chosen_delta), set_state("stop")}));
    rules.push_back(rule("STOP", {goal_state("stop")}, {say(kEndOfRound), set_state("begin"), SignalRoundEnd{}}));

    // intermediate: key metrics only, shorten the section with the lower OEE
    if (intermediate) {
        rules.push_back(rule("DECIDE-INTERMEDIATE", {goal_state("start")},
                             {set_state("intermediate"), set_retrieval("decision-state", SlotValue("intermediate"))}));
    }
    rules.push_back(rule(
        "INTERMEDIATE-STRATEGY", {goal_state("intermediate")},
        {
            say_number([headcount](const ActionContext& ctx) {
                const auto p = perceived_instance(ctx);
                return compute_headcount_delta(p, 0, p.reduction, headcount);
            }),
            RequestImaginalWrite{[](const ActionContext& ctx) {
                const auto p = perceived_instance(ctx);
                const char* lower = p.oee_asm <= p.oee_pre ? "asm" : "pre";
                return make_chunk(ChunkType::decision_merits, {{"lower-oee", SlotValue(lower)}}, "MERITS");
            }},
            set_state("intermediate-choice"),
        }));
    {
        auto acts = section_choice(1, 1, kChooseAssemble);
        acts.push_back(set_state("recount"));
        rules.push_back(rule("INERMEDIATE-CHOICE2",
                             {goal_state("intermediate-choice"),
                              Condition{BufferName::imaginal, Symbol("lower-oee"), Comparator::eq, SlotValue("asm")}},
                             std::move(acts)));
    }
    {
        auto acts = section_choice(0, 1, kChoosePreassemble);
        acts.push_back(set_state("recount"));
        rules.push_back(rule("INERMEDIATE-CHOICE1",
                             {goal_state("intermediate-choice"),
                              Condition{BufferName::imaginal, Symbol("lower-oee"), Comparator::eq, SlotValue("pre")}},
                             std::move(acts)));
    }

    // expert: weights -> defect increases -> compare -> decide
    if (expert) {
        rules.push_back(rule("EXPERT-STRATEGY", {goal_state("start")},
                             {set_state("perceive"), set_retrieval("decision-state", SlotValue("expert"))}));
    }
    rules.push_back(rule("PERCEIVE",
                         {goal_state("perceive"),
                          Condition{BufferName::retrieval, Symbol("decision-state"), Comparator::eq, SlotValue("expert")}},
                         {set_state("pre-weight")}));

    auto weight_of = [defect](int section) {
        return [defect, section](const ActionContext& ctx) { return defect.weight(perceived_instance(ctx), section); };
    };
    auto defect_of = [defect](int section) {
        return [defect, section](const ActionContext& ctx) {
            const auto p = perceived_instance(ctx);
            return defect.defect_increase(p, section, p.reduction);
        };
    };
    auto remember = [](const char* slot, std::function<double(const ActionContext&)> fn) {
        return RequestImaginalWrite{[slot, fn = std::move(fn)](const ActionContext& ctx) {
            return merits_with(ctx, slot, fn(ctx));
        }};
    };

    rules.push_back(rule("PREASSEMBLE-WEIGHT", {goal_state("pre-weight")},
                         {say_number(weight_of(0)), say("caculate the preassemble defect decision weight"),
                          remember("w-pre", weight_of(0)), set_state("asm-weight")}));
    rules.push_back(rule("ASSEMBLE-WEIGHT", {goal_state("asm-weight"), imaginal_has("w-pre")},
                         {say_number(weight_of(1)), say("calculate the assemble defect decision weight"),
                          remember("w-asm", weight_of(1)), set_state("pre-defect")}));
    rules.push_back(rule("PREASSEMBLE", {goal_state("pre-defect"), imaginal_has("w-asm")},
                         {say_number(defect_of(0)), say("calculate the final preassemble defect rate"),
                          remember("defect-pre", defect_of(0)), set_state("asm-defect")}));
    rules.push_back(rule("ASSEMBLE", {goal_state("asm-defect"), imaginal_has("defect-pre")},
                         {say_number(defect_of(1)), say("calclate the assemble defect rate"),
                          remember("defect-asm", defect_of(1)), set_state("compare")}));

    auto diff = [](const ActionContext& ctx) {
        return ctx.number(BufferName::imaginal, "defect-pre") - ctx.number(BufferName::imaginal, "defect-asm");
    };
    rules.push_back(rule("COMPARE", {goal_state("compare"), imaginal_has("defect-asm")},
                         {say_number(diff),
                          ModifyBuffer{BufferName::imaginal, Symbol("defect-diff"),
                                       ValueFn([diff](const ActionContext& ctx) { return SlotValue(diff(ctx)); })},
                          ModifyBuffer{BufferName::goal, Symbol("comparison"),
                                       ValueFn([diff](const ActionContext& ctx) { return SlotValue(diff(ctx)); })},
                          set_state("decide")}));

    auto expert_section = [](const ActionContext& ctx) {
        return ctx.number(BufferName::imaginal, "defect-diff") <= 0.0 ? 0 : 1;
    };
    rules.push_back(rule(
        "DECIDE", {goal_state("decide"), imaginal_has("defect-diff")},
        {
            EmitOutput{TextFn([expert_section](const ActionContext& ctx) {
                return std::string(expert_section(ctx) == 0 ? kChoosePreassemble : kChooseAssemble);
            })},
            ModifyBuffer{BufferName::retrieval, Symbol("chosen-section"),
                         ValueFn([expert_section](const ActionContext& ctx) {
                             return SlotValue(section_symbol(expert_section(ctx)));
                         })},
            SignalDecision{SectionFn(expert_section), 2},
            set_state("headcount"),
        }));
    rules.push_back(rule("HEADCOUNT", {goal_state("headcount")}, {say_number(chosen_delta), set_state("stop")}));

    return rules;
}

void init_run(Engine& engine, const ProblemInstance& inst)
{
    engine.preload(BufferName::retrieval, make_decision_chunk(inst));
    engine.set_goal(make_goal_chunk());
}

TrialResult run_trial(Engine& engine, const ProblemInstance& inst, const TaskModels& models, const std::string& run_id,
                      int set_index, int trial_index)
{
    const std::size_t mark = engine.log().size();
    RoundResult round = engine.run_until_round_end();
    if (!round.decision) {
        throw Error(Errc::deadlock, "round ended without a decision");
    }
    DecisionOutcome out;
    out.run_id = run_id;
    out.set_index = set_index;
    out.trial_index = trial_index;
    out.section = round.decision->section;
    out.strategy = round.decision->strategy;
    out.headcount_delta = compute_headcount_delta(inst, out.section, inst.reduction, models.headcount);
    out.reward_received = reward_for(out.strategy, out.headcount_delta, models.reward);
    engine.apply_reward(out.reward_received);

    TrialResult result;
    result.outcome = std::move(out);
    result.trace.assign(engine.log().begin() + static_cast<std::ptrdiff_t>(mark), engine.log().end());
    return result;
}

std::string make_run_id(int set_index, int run_index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%02d-r%d", set_index, run_index);
    return buf;
}

BatchResult run_batch(std::span<const ProblemInstance> problem_sets, const BatchConfig& config)
{
    if (config.runs_per_set < 1 || config.trials_per_run < 1) {
        throw Error(Errc::invalid_argument, "runs_per_set and trials_per_run must be >= 1");
    }
    config.models.reward.validate();
    BatchResult result;
    std::uint64_t global_run = 0;
    for (std::size_t s = 0; s < problem_sets.size(); ++s) {
        const auto& inst = problem_sets[s];
        for (int r = 0; r < config.runs_per_set; ++r, ++global_run) {
            PersonaFilter filter = PersonaFilter::all;
            if (config.mode == BatchMode::fixed_persona) {
                static constexpr PersonaFilter by_run[] = {PersonaFilter::novice_only, PersonaFilter::intermediate_only,
                                                           PersonaFilter::expert_only};
                filter = by_run[r % 3];
            }
            EngineConfig ec = config.engine;
            ec.rng_seed = derive_seed(config.master_seed, global_run);
            Engine engine(build_persona_rules(inst, config.models, filter), ec);
            init_run(engine, inst);

            const std::string run_id = make_run_id(static_cast<int>(s), r);
            int expert_streak = 0;
            for (int t = 0; t < config.trials_per_run; ++t) {
                auto trial = run_trial(engine, inst, config.models, run_id, static_cast<int>(s), t + 1);
                expert_streak = trial.outcome.strategy == 2 ? expert_streak + 1 : 0;
                result.outcomes.push_back(std::move(trial.outcome));
                const bool penultimate = t == config.trials_per_run - 2;
                if (config.stop_when_stable && config.trials_per_run >= 4 && penultimate && expert_streak >= 3) {
                    break;
                }
            }
            result.traces.push_back(RunTrace{run_id, static_cast<int>(s), r, engine.log()});
        }
    }
    return result;
}

} // namespace vsmactr
