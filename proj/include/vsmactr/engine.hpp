#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vsmactr/memory.hpp"
#include "vsmactr/rng.hpp"
#include "vsmactr/sim_time.hpp"
#include "vsmactr/trace.hpp"

namespace vsmactr {

using BufferSet = std::array<Buffer, 3>;

inline Buffer& buffer_of(BufferSet& set, BufferName name) { return set[static_cast<std::size_t>(name)]; }
inline const Buffer& buffer_of(const BufferSet& set, BufferName name) { return set[static_cast<std::size_t>(name)]; }

enum class Comparator { eq, neq, lt, gt, le, ge };

/// Pattern variable. The first `eq` test against an unbound variable binds it.
struct Variable {
    std::string name;
};

using Operand = std::variant<SlotValue, Variable>;

struct Condition {
    BufferName buffer;
    Symbol slot;
    Comparator cmp = Comparator::eq;
    Operand operand;
};

using Bindings = std::vector<std::pair<std::string, SlotValue>>;

/// Read-only view handed to computed actions while a production fires.
class ActionContext {
public:
    ActionContext(const BufferSet& buffers, const Bindings& bindings, SimTime now)
        : buffers_(buffers), bindings_(bindings), now_(now) {}

    SimTime now() const noexcept { return now_; }
    const Chunk* chunk(BufferName b) const noexcept { return buffer_of(buffers_, b).visible(now_); }
    SlotValue slot(BufferName b, std::string_view name) const;
    // Throws Error{invalid_slot_value} when the slot is not numeric.
    double number(BufferName b, std::string_view name) const;
    SlotValue binding(std::string_view var) const;

private:
    const BufferSet& buffers_;
    const Bindings& bindings_;
    SimTime now_;
};

using ValueFn = std::function<SlotValue(const ActionContext&)>;
using TextFn = std::function<std::string(const ActionContext&)>;
using ChunkFn = std::function<Chunk(const ActionContext&)>;
using SectionFn = std::function<int(const ActionContext&)>;

struct ModifyBuffer {
    BufferName buffer;
    Symbol slot;
    std::variant<SlotValue, Variable, ValueFn> value;
};

struct RequestImaginalWrite {
    ChunkFn make;
};

struct EmitOutput {
    std::variant<std::string, TextFn> text;
};

struct SignalDecision {
    std::variant<int, SectionFn> section;
    int strategy = 0;
};

struct SignalRoundEnd {};

using Action = std::variant<ModifyBuffer, RequestImaginalWrite, EmitOutput, SignalDecision, SignalRoundEnd>;

struct Production {
    std::string name;
    std::vector<Condition> conditions;
    std::vector<Action> actions;
    double utility = 0.0;
    double initial_utility = 0.0;
    std::optional<SimTime> last_selection_time;
    bool fired_since_last_reward = false;
};

enum class TemperatureRule { sqrt2_times_s, sqrt_of_2s };
enum class UtilityPrecision { single, double_precision };

struct EngineConfig {
    double alpha = 0.2;
    double noise_s = 0.8;
    TemperatureRule temperature_rule = TemperatureRule::sqrt2_times_s;
    SimTime production_latency = SimTime::from_ms(50);
    SimTime imaginal_delay = SimTime::from_ms(200);
    std::uint64_t rng_seed = 0;
    // Utilities accumulate in 32-bit floats by default so traces reproduce
    // single-float artifacts such as -0.45000002.
    UtilityPrecision precision = UtilityPrecision::single;
    std::size_t step_limit = 10000;

    /// Throws Error{invalid_argument} on out-of-range values.
    void validate() const;
    /// Softmax temperature; 0 when noise_s is 0.
    double temperature() const;
};

struct Match {
    std::size_t index = 0;
    Bindings bindings;
};

/// Productions whose every condition holds against the visible buffer
/// contents at `now`, in declaration order.
std::vector<Match> match(std::span<const Production> productions, const BufferSet& buffers, SimTime now);

/// Softmax over utilities / temperature, computed with max-subtraction.
std::vector<double> selection_probabilities(std::span<const double> utilities, double temperature);

/// Samples an index into `utilities`. With noise_s == 0 returns the arg-max
/// (lowest index on ties) without touching the rng.
/// Throws Error{empty_conflict_set} on empty input.
std::size_t select(std::span<const double> utilities, const EngineConfig& config, Rng& rng);

/// One temporal-difference step U + alpha (R - U) at the requested precision.
double td_update(double u_prev, double r_eff, double alpha, UtilityPrecision precision);

struct UtilityStep {
    double dt = 0.0;
    double r_eff = 0.0;
    double u_new = 0.0;
};

/// The per-production part of apply_reward: R(n) = reward - elapsed seconds,
/// then td_update. Single precision rounds reward, alpha and dt to float first.
UtilityStep reward_step(double u_prev, double reward, SimTime elapsed, double alpha, UtilityPrecision precision);

struct DecisionSignal {
    int section = 0;
    int strategy = 0;
    friend bool operator==(const DecisionSignal&, const DecisionSignal&) = default;
};

struct RoundResult {
    TraceLog events;
    std::optional<DecisionSignal> decision;
    std::size_t firings = 0;
};

/// Single-threaded production-system runtime. Owns its rule set, buffers,
/// clock, rng and trace log.
class Engine {
public:
    /// Picks an entry of the conflict set; the default samples the softmax.
    using Selector = std::function<std::size_t(std::span<const Production* const>, Rng&)>;

    Engine(std::vector<Production> rules, EngineConfig config);

    const EngineConfig& config() const noexcept { return config_; }
    SimTime now() const noexcept { return now_; }
    const TraceLog& log() const noexcept { return log_; }
    std::span<const Production> productions() const noexcept { return rules_; }
    const Production& production(std::string_view name) const;
    Production& production(std::string_view name);
    const Buffer& buffer(BufferName b) const noexcept { return buffer_of(buffers_, b); }

    /// Installs the goal chunk and logs SET-BUFFER-CHUNK GOAL <name> NIL.
    void set_goal(Chunk goal);
    /// Installs a chunk without a trace event (task data loaded before a run).
    void preload(BufferName b, Chunk chunk);

    void set_selector(Selector selector) { selector_ = std::move(selector); }

    std::vector<Match> conflict_set() const { return match(rules_, buffers_, now_); }

    /// Fires the matched production selected at the current clock value.
    void fire(const Match& m);

    /// Rewards every production fired since the last reward, in firing order,
    /// with R(n) = reward - (now - selection time).
    void apply_reward(double reward) { apply_reward(reward, now_); }
    void apply_reward(double reward, SimTime now);

    /// match -> select -> fire until a production signals the end of a round.
    /// Throws Error{deadlock} or Error{step_limit_exceeded}.
    RoundResult run_until_round_end();

    /// Back to initial utilities, cleared learning state (start of a run).
    void reset_utilities();

private:
    void flush_pending(SimTime upto);
    void execute(const Action& action, const Bindings& bindings);
    std::string buffer_snapshot() const;

    std::vector<Production> rules_;
    EngineConfig config_;
    BufferSet buffers_;
    SimTime now_{};
    Rng rng_;
    TraceLog log_;
    Selector selector_;
    std::vector<std::pair<SimTime, BufferName>> pending_;
    std::vector<std::size_t> fired_order_;
    std::optional<DecisionSignal> decision_;
    bool round_end_ = false;
};

} // namespace vsmactr
