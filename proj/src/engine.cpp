#include "vsmactr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const SlotValue* find_binding(const Bindings& b, std::string_view name)
{
    for (const auto& [k, v] : b) {
        if (k == name) return &v;
    }
    return nullptr;
}

bool compare(const SlotValue& actual, Comparator cmp, const SlotValue& expected)
{
    switch (cmp) {
    case Comparator::eq: return actual == expected;
    case Comparator::neq: return !(actual == expected);
    default: break;
    }
    if (!actual.is_number() || !expected.is_number()) return false;
    const double a = actual.number();
    const double e = expected.number();
    switch (cmp) {
    case Comparator::lt: return a < e;
    case Comparator::gt: return a > e;
    case Comparator::le: return a <= e;
    case Comparator::ge: return a >= e;
    default: return false;
    }
}

std::optional<Bindings> try_match(const Production& p, const BufferSet& buffers, SimTime now)
{
    Bindings bindings;
    for (const auto& c : p.conditions) {
        const Chunk* chunk = buffer_of(buffers, c.buffer).visible(now);
        if (!chunk) return std::nullopt;
        const SlotValue actual = chunk->get(c.slot);
        if (const auto* var = std::get_if<Variable>(&c.operand)) {
            const SlotValue* bound = find_binding(bindings, var->name);
            if (!bound) {
                if (c.cmp != Comparator::eq) return std::nullopt;
                bindings.emplace_back(var->name, actual);
                continue;
            }
            if (!compare(actual, c.cmp, *bound)) return std::nullopt;
        } else if (!compare(actual, c.cmp, std::get<SlotValue>(c.operand))) {
            return std::nullopt;
        }
    }
    return bindings;
}

} // namespace

SlotValue ActionContext::slot(BufferName b, std::string_view name) const
{
    const Chunk* c = chunk(b);
    return c ? c->get(name) : SlotValue::nil();
}

double ActionContext::number(BufferName b, std::string_view name) const
{
    const SlotValue v = slot(b, name);
    if (!v.is_number()) {
        throw Error(Errc::invalid_slot_value,
                    std::string(buffer_label(b)) + " slot " + std::string(name) + " is not numeric (" + v.to_string() + ")");
    }
    return v.number();
}

SlotValue ActionContext::binding(std::string_view var) const
{
    const SlotValue* v = find_binding(bindings_, var);
    return v ? *v : SlotValue::nil();
}

void EngineConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::invalid_argument, "alpha must lie in (0,1)");
    if (!(noise_s >= 0.0) || !std::isfinite(noise_s)) throw Error(Errc::invalid_argument, "noise_s must be >= 0");
    if (production_latency.ms <= 0) throw Error(Errc::invalid_argument, "production_latency must be > 0");
    if (imaginal_delay.ms < 0) throw Error(Errc::invalid_argument, "imaginal_delay must be >= 0");
    if (step_limit == 0) throw Error(Errc::invalid_argument, "step_limit must be > 0");
}

double EngineConfig::temperature() const
{
    if (noise_s == 0.0) return 0.0;
    return temperature_rule == TemperatureRule::sqrt2_times_s ? std::sqrt(2.0) * noise_s : std::sqrt(2.0 * noise_s);
}

std::vector<Match> match(std::span<const Production> productions, const BufferSet& buffers, SimTime now)
{
    std::vector<Match> out;
    for (std::size_t i = 0; i < productions.size(); ++i) {
        if (auto b = try_match(productions[i], buffers, now)) {
            out.push_back(Match{i, std::move(*b)});
        }
    }
    return out;
}

std::vector<double> selection_probabilities(std::span<const double> utilities, double temperature)
{
    if (utilities.empty()) throw Error(Errc::empty_conflict_set, "no utilities");
    if (!(temperature > 0.0)) throw Error(Errc::invalid_argument, "temperature must be > 0");
    const double top = *std::max_element(utilities.begin(), utilities.end());
    std::vector<double> p(utilities.size());
    double total = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        p[i] = std::exp((utilities[i] - top) / temperature);
        total += p[i];
    }
    for (auto& x : p) x /= total;
    return p;
}

std::size_t select(std::span<const double> utilities, const EngineConfig& config, Rng& rng)
{
    if (utilities.empty()) throw Error(Errc::empty_conflict_set, "nothing to select from");
    const double t = config.temperature();
    if (t == 0.0) {
        return static_cast<std::size_t>(std::max_element(utilities.begin(), utilities.end()) - utilities.begin());
    }
    const auto p = selection_probabilities(utilities, t);
    const double u = uniform01(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cum += p[i];
        if (u < cum) return i;
    }
    return p.size() - 1;
}

double td_update(double u_prev, double r_eff, double alpha, UtilityPrecision precision)
{
    if (precision == UtilityPrecision::single) {
        const auto u = static_cast<float>(u_prev);
        const auto r = static_cast<float>(r_eff);
        const auto a = static_cast<float>(alpha);
        return static_cast<double>(u + a * (r - u));
    }
    return u_prev + alpha * (r_eff - u_prev);
}

UtilityStep reward_step(double u_prev, double reward, SimTime elapsed, double alpha, UtilityPrecision precision)
{
    UtilityStep st;
    if (precision == UtilityPrecision::single) {
        const float dt_f = elapsed.seconds_f();
        st.dt = dt_f;
        st.r_eff = static_cast<double>(static_cast<float>(reward) - dt_f);
        alpha = static_cast<double>(static_cast<float>(alpha));
    } else {
        st.dt = elapsed.seconds();
        st.r_eff = reward - st.dt;
    }
    st.u_new = td_update(u_prev, st.r_eff, alpha, precision);
    return st;
}

Engine::Engine(std::vector<Production> rules, EngineConfig config)
    : rules_(std::move(rules)), config_(config), rng_(config.rng_seed)
{
    config_.validate();
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (rules_[i].name == rules_[j].name) {
                throw Error(Errc::invalid_argument, "duplicate production name " + rules_[i].name);
            }
        }
    }
    buffers_[0].name = BufferName::goal;
    buffers_[1].name = BufferName::imaginal;
    buffers_[2].name = BufferName::retrieval;
    reset_utilities();
}

const Production& Engine::production(std::string_view name) const
{
    for (const auto& p : rules_) {
        if (p.name == name) return p;
    }
    throw Error(Errc::invalid_argument, "no production named " + std::string(name));
}

Production& Engine::production(std::string_view name)
{
    return const_cast<Production&>(std::as_const(*this).production(name));
}

void Engine::set_goal(Chunk goal)
{
    std::string args = "GOAL " + goal.name() + " NIL";
    buffer_of(buffers_, BufferName::goal) = buffer_write(buffer_of(buffers_, BufferName::goal), std::move(goal), now_, {});
    log_.push_back(TraceEvent::buffer_set(now_, TraceModule::goal, TraceKind::set_buffer_chunk, std::move(args)));
}

void Engine::preload(BufferName b, Chunk chunk)
{
    buffer_of(buffers_, b) = buffer_write(buffer_of(buffers_, b), std::move(chunk), now_, {});
}

void Engine::reset_utilities()
{
    for (auto& p : rules_) {
        p.utility = p.initial_utility;
        p.last_selection_time.reset();
        p.fired_since_last_reward = false;
    }
    fired_order_.clear();
}

void Engine::flush_pending(SimTime upto)
{
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t done = 0;
    for (; done < pending_.size() && pending_[done].first <= upto; ++done) {
        const auto [t, b] = pending_[done];
        log_.push_back(TraceEvent::buffer_set(t, TraceModule::imaginal, TraceKind::set_buffer_chunk_from_spec,
                                              std::string(buffer_label(b)) + " "));
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(done));
}

void Engine::execute(const Action& action, const Bindings& bindings)
{
    std::visit(Overloaded{
                   [&](const ModifyBuffer& a) {
                       Buffer& buf = buffer_of(buffers_, a.buffer);
                       if (buf.busy(now_)) {
                           throw Error(Errc::buffer_busy, "modify of busy " + std::string(buffer_label(a.buffer)));
                       }
                       if (!buf.content) {
                           throw Error(Errc::invalid_argument, "modify of empty " + std::string(buffer_label(a.buffer)));
                       }
                       ActionContext ctx(buffers_, bindings, now_);
                       SlotValue v = std::visit(Overloaded{
                                                    [](const SlotValue& s) { return s; },
                                                    [&](const Variable& var) { return ctx.binding(var.name); },
                                                    [&](const ValueFn& fn) { return fn(ctx); },
                                                },
                                                a.value);
                       buf.content = buf.content->with(a.slot, std::move(v));
                   },
                   [&](const RequestImaginalWrite& a) {
                       ActionContext ctx(buffers_, bindings, now_);
                       Chunk c = a.make(ctx);
                       Buffer& img = buffer_of(buffers_, BufferName::imaginal);
                       img = buffer_write(img, std::move(c), now_, config_.imaginal_delay);
                       pending_.emplace_back(img.busy_until, BufferName::imaginal);
                       if (config_.imaginal_delay.ms == 0) flush_pending(now_);
                   },
                   [&](const EmitOutput& a) {
                       ActionContext ctx(buffers_, bindings, now_);
                       std::string text = std::visit(Overloaded{
                                                         [](const std::string& s) { return s; },
                                                         [&](const TextFn& fn) { return fn(ctx); },
                                                     },
                                                     a.text);
                       log_.push_back(TraceEvent::output(now_, std::move(text)));
                   },
                   [&](const SignalDecision& a) {
                       ActionContext ctx(buffers_, bindings, now_);
                       const int section = std::visit(Overloaded{
                                                          [](int s) { return s; },
                                                          [&](const SectionFn& fn) { return fn(ctx); },
                                                      },
                                                      a.section);
                       decision_ = DecisionSignal{section, a.strategy};
                   },
                   [&](const SignalRoundEnd&) { round_end_ = true; },
               },
               action);
}

void Engine::fire(const Match& m)
{
    if (m.index >= rules_.size()) throw Error(Errc::invalid_argument, "match index out of range");
    const SimTime selected_at = now_;
    now_ += config_.production_latency;
    flush_pending(now_);
    Production& p = rules_[m.index];
    log_.push_back(TraceEvent::fired(now_, p.name));
    for (const auto& a : p.actions) {
        execute(a, m.bindings);
    }
    p.last_selection_time = selected_at;
    if (!p.fired_since_last_reward) {
        p.fired_since_last_reward = true;
        fired_order_.push_back(m.index);
    }
}

void Engine::apply_reward(double reward, SimTime now)
{
    const bool single = config_.precision == UtilityPrecision::single;
    const double alpha = single ? static_cast<double>(static_cast<float>(config_.alpha)) : config_.alpha;
    const double r = single ? static_cast<double>(static_cast<float>(reward)) : reward;
    log_.push_back(TraceEvent::reward_header(now, r, alpha));
    for (std::size_t idx : fired_order_) {
        Production& p = rules_[idx];
        const SimTime elapsed = now - p.last_selection_time.value_or(now);
        const double u_prev = p.utility;
        const auto [dt, r_eff, u_new] = reward_step(u_prev, r, elapsed, alpha, config_.precision);
        if (!std::isfinite(u_new)) {
            throw Error(Errc::invalid_argument, "utility of " + p.name + " became non-finite");
        }
        p.utility = u_new;
        p.fired_since_last_reward = false;
        log_.push_back(TraceEvent::utility(now, p.name, u_prev, r, dt, r_eff, u_new));
    }
    fired_order_.clear();
}

std::string Engine::buffer_snapshot() const
{
    std::ostringstream os;
    for (const auto& b : buffers_) {
        os << buffer_label(b.name) << ": ";
        if (!b.content) {
            os << "empty";
        } else {
            os << b.content->name() << " (" << chunk_type_name(b.content->type()) << ")";
            for (const auto& [k, v] : b.content->slots()) os << ' ' << k.str() << '=' << v.to_string();
            if (b.busy(now_)) os << " [busy until " << numfmt::seconds3(b.busy_until) << "]";
        }
        os << "; ";
    }
    return os.str();
}

RoundResult Engine::run_until_round_end()
{
    const std::size_t mark = log_.size();
    round_end_ = false;
    decision_.reset();
    std::size_t firings = 0;
    while (!round_end_) {
        if (firings >= config_.step_limit) {
            throw Error(Errc::step_limit_exceeded,
                        std::to_string(firings) + " firings without a round end at t=" + numfmt::seconds3(now_));
        }
        flush_pending(now_);
        auto cs = conflict_set();
        if (cs.empty()) {
            if (!pending_.empty()) {
                now_ = std::min_element(pending_.begin(), pending_.end(),
                                        [](const auto& a, const auto& b) { return a.first < b.first; })
                           ->first;
                continue;
            }
            throw Error(Errc::deadlock, "empty conflict set at t=" + numfmt::seconds3(now_) + "; " + buffer_snapshot());
        }
        std::size_t pick = 0;
        if (selector_) {
            std::vector<const Production*> candidates;
            candidates.reserve(cs.size());
            for (const auto& m : cs) candidates.push_back(&rules_[m.index]);
            pick = selector_(candidates, rng_);
            if (pick >= cs.size()) throw Error(Errc::invalid_argument, "selector returned out-of-range index");
        } else {
            std::vector<double> utilities;
            utilities.reserve(cs.size());
            for (const auto& m : cs) utilities.push_back(rules_[m.index].utility);
            pick = select(utilities, config_, rng_);
        }
        fire(cs[pick]);
        ++firings;
    }
    RoundResult out;
    out.events.assign(log_.begin() + static_cast<std::ptrdiff_t>(mark), log_.end());
    out.decision = decision_;
    out.firings = firings;
    return out;
}

} // namespace vsmactr
