#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "vsmactr/engine.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

using namespace vsmactr;

namespace {

Condition goal_is(const char* slot, SlotValue v, Comparator c = Comparator::eq)
{
    return Condition{BufferName::goal, Symbol(slot), c, Operand{std::move(v)}};
}

ModifyBuffer set_goal_slot(const char* slot, SlotValue v) { return ModifyBuffer{BufferName::goal, Symbol(slot), v}; }

Production rule(std::string name, std::vector<Condition> conds, std::vector<Action> acts, double u = 0.0)
{
    Production p;
    p.name = std::move(name);
    p.conditions = std::move(conds);
    p.actions = std::move(acts);
    p.utility = p.initial_utility = u;
    return p;
}

EngineConfig quiet()
{
    EngineConfig c;
    c.noise_s = 0.0;
    return c;
}

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::invalid_argument;
}

BufferSet goal_buffers(Chunk goal)
{
    BufferSet b;
    b[0].name = BufferName::goal;
    b[1].name = BufferName::imaginal;
    b[2].name = BufferName::retrieval;
    b[0].content = std::move(goal);
    return b;
}

} // namespace

TEST_CASE("match")
{
    std::vector<Production> rules = {
        rule("A", {goal_is("state", "start")}, {}),
        rule("B", {goal_is("state", "start")}, {}),
        rule("C", {goal_is("state", "start")}, {}),
        rule("D", {goal_is("state", "stop")}, {}),
    };
    auto buffers = goal_buffers(make_chunk(ChunkType::goal, {{"state", "start"}}));
    auto cs = match(rules, buffers, {});
    REQUIRE(cs.size() == 3);
    CHECK(cs[0].index == 0);
    CHECK(cs[2].index == 2);

    auto none = goal_buffers(make_chunk(ChunkType::goal, {{"state", "other"}}));
    CHECK(match(rules, none, {}).empty());

    std::vector<Production> one = {rule("ANY", {}, {})};
    CHECK(match(one, none, {}).size() == 1);
}

TEST_CASE("match comparators and variables")
{
    auto buffers = goal_buffers(make_chunk(ChunkType::goal, {{"a", 3.0}, {"b", 3.0}, {"c", 5.0}, {"s", "x"}}));
    auto var = [](const char* slot, const char* v, Comparator c = Comparator::eq) {
        return Condition{BufferName::goal, Symbol(slot), c, Operand{Variable{v}}};
    };
    std::vector<Production> rules = {
        rule("SAME", {var("a", "v"), var("b", "v")}, {}),
        rule("DIFF", {var("a", "v"), var("c", "v")}, {}),
        rule("GT", {var("a", "v"), var("c", "v", Comparator::gt)}, {}),
        rule("LT", {var("a", "v"), var("c", "v", Comparator::lt)}, {}),
        rule("GE", {goal_is("c", 5.0, Comparator::ge), goal_is("a", 3.0, Comparator::le)}, {}),
        rule("GT-SYM", {goal_is("s", 1.0, Comparator::gt)}, {}),
        rule("NEQ-NIL", {goal_is("s", SlotValue::nil(), Comparator::neq)}, {}),
        rule("NIL", {goal_is("absent", SlotValue::nil())}, {}),
        rule("IMAGINAL", {Condition{BufferName::imaginal, Symbol("x"), Comparator::eq, Operand{SlotValue::nil()}}}, {}),
    };
    std::vector<std::string> names;
    for (const auto& m : match(rules, buffers, {})) names.push_back(rules[m.index].name);
    std::string joined;
    for (const auto& n : names) joined += n + ",";
    CHECK(joined == "SAME,GT,GE,NEQ-NIL,NIL,");

    auto cs = match(rules, buffers, {});
    REQUIRE(!cs.empty());
    REQUIRE(cs[0].bindings.size() == 1);
    CHECK(cs[0].bindings[0].second == SlotValue(3.0));
}

TEST_CASE("temperature rules")
{
    EngineConfig c;
    c.noise_s = 0.5;
    CHECK(c.temperature() == doctest::Approx(std::sqrt(2.0) * 0.5).epsilon(1e-15));
    c.temperature_rule = TemperatureRule::sqrt_of_2s;
    CHECK(c.temperature() == doctest::Approx(1.0).epsilon(1e-15));
    c.noise_s = 0.0;
    CHECK(c.temperature() == 0.0);
}

TEST_CASE("config validation")
{
    EngineConfig c;
    c.alpha = 1.0;
    CHECK(code_of([&] { c.validate(); }) == Errc::invalid_argument);
    c.alpha = 0.0;
    CHECK(code_of([&] { c.validate(); }) == Errc::invalid_argument);
    c = {};
    c.noise_s = -0.1;
    CHECK(code_of([&] { c.validate(); }) == Errc::invalid_argument);
    c = {};
    c.production_latency = SimTime::from_ms(0);
    CHECK(code_of([&] { c.validate(); }) == Errc::invalid_argument);
}

TEST_CASE("softmax closed form")
{
    const std::vector<double> u = {1.0, 2.0};
    auto p = selection_probabilities(u, 1.0);
    const double expect = std::exp(2.0) / (std::exp(1.0) + std::exp(2.0));
    CHECK(p[1] == doctest::Approx(expect).epsilon(1e-14));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-15));

    // large utilities stay finite thanks to max-subtraction
    const std::vector<double> big = {1000.0, 1001.0};
    auto q = selection_probabilities(big, 1.0);
    CHECK(q[1] == doctest::Approx(expect).epsilon(1e-12));

    EngineConfig cfg;
    cfg.noise_s = 1.0 / std::sqrt(2.0);
    Rng rng(7);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += select(u, cfg, rng) == 1 ? 1 : 0;
    const double sigma = std::sqrt(expect * (1 - expect) / n);
    CHECK(std::abs(hits / double(n) - expect) < 4 * sigma);
}

TEST_CASE("select at zero noise")
{
    EngineConfig cfg = quiet();
    Rng rng(1);
    const auto before = rng;
    CHECK(select(std::vector<double>{3.0, 0.0, 0.0}, cfg, rng) == 0);
    CHECK(select(std::vector<double>{0.0, 2.0, 2.0}, cfg, rng) == 1);
    CHECK(rng == before);
    CHECK(code_of([&] { select(std::vector<double>{}, cfg, rng); }) == Errc::empty_conflict_set);
}

TEST_CASE("td update")
{
    CHECK(td_update(3.0, -2.2, 0.2, UtilityPrecision::single) == double(1.96f));
    CHECK(numfmt::trace_number(td_update(0.0, -2.25, 0.2, UtilityPrecision::single)) == "-0.45000002");
    CHECK(td_update(-0.65, -2.5, 0.2, UtilityPrecision::double_precision) == doctest::Approx(-1.02).epsilon(1e-12));
}

TEST_CASE("reward step reproduces recorded updates")
{
    struct Row {
        double u_prev, reward;
        int dt_ms;
        const char* r_eff;
        const char* u_new;
    };
    const Row rows[] = {
        {3.0, -2.0, 200, "-2.2", "1.96"},
        {0.0, -2.0, 250, "-2.25", "-0.45000002"},
        {-0.46, 6.0, 1350, "4.65", "0.56200004"},
        {-0.338, 6.0, 50, "5.95", "0.91959995"},
    };
    for (const auto& r : rows) {
        CAPTURE(r.u_new);
        auto st = reward_step(double(float(r.u_prev)), r.reward, SimTime::from_ms(r.dt_ms), 0.2,
                              UtilityPrecision::single);
        CHECK(numfmt::trace_number(st.r_eff) == r.r_eff);
        CHECK(numfmt::trace_number(st.u_new) == r.u_new);
    }
    auto d = reward_step(-0.65, -2.0, SimTime::from_ms(500), 0.2, UtilityPrecision::double_precision);
    CHECK(d.r_eff == -2.5);
    CHECK(std::abs(d.u_new - (-1.02)) < 1e-9);
}

TEST_CASE("firing advances the clock and logs")
{
    std::vector<Production> rules = {
        rule("GO", {goal_is("state", "begin")}, {set_goal_slot("state", "next")}),
        rule("END", {goal_is("state", "next")},
             {EmitOutput{std::string("this is the end of one decision making")}, set_goal_slot("state", "done"),
              SignalDecision{1, 0}, SignalRoundEnd{}}),
    };
    Engine e(rules, quiet());
    e.set_goal(make_chunk(ChunkType::goal, {{"state", "begin"}}, "G"));
    auto r = e.run_until_round_end();
    CHECK(r.firings == 2);
    REQUIRE(r.decision);
    CHECK(*r.decision == DecisionSignal{1, 0});
    REQUIRE(e.log().size() == 4);
    CHECK(e.log()[0].text == "GOAL G NIL");
    CHECK(e.log()[1].time == SimTime::from_ms(50));
    CHECK(e.log()[1].name == "GO");
    CHECK(e.log()[2].time == SimTime::from_ms(100));
    CHECK(e.log()[3].kind == TraceKind::output);
    CHECK(e.log()[3].text == "this is the end of one decision making");
    CHECK(e.production("GO").last_selection_time == SimTime::from_ms(0));
    CHECK(e.production("END").last_selection_time == SimTime::from_ms(50));
    CHECK(e.production("END").fired_since_last_reward);

    e.apply_reward(-2.0);
    const auto& log = e.log();
    REQUIRE(log.size() == 7);
    CHECK(log[4].kind == TraceKind::reward);
    CHECK(log[5].name == "GO");
    CHECK(log[5].dt == doctest::Approx(0.1));
    CHECK(log[6].name == "END");
    CHECK(log[6].dt == doctest::Approx(0.05));
    CHECK_FALSE(e.production("GO").fired_since_last_reward);
    CHECK(audit_utility_updates(log).empty());

    // a second reward without firings touches nothing
    e.apply_reward(5.0);
    CHECK(e.log().size() == 8);
}

TEST_CASE("imaginal delay hides content and the clock jumps to completion")
{
    std::vector<Production> rules = {
        rule("WRITE", {goal_is("state", "begin")},
             {RequestImaginalWrite{[](const ActionContext&) {
                  return make_chunk(ChunkType::decision_merits, {{"lower-oee", "asm"}});
              }},
              set_goal_slot("state", "wait")}),
        rule("READ",
             {goal_is("state", "wait"),
              Condition{BufferName::imaginal, Symbol("lower-oee"), Comparator::eq, Operand{SlotValue("asm")}}},
             {SignalRoundEnd{}}),
    };
    Engine e(rules, quiet());
    e.set_goal(make_chunk(ChunkType::goal, {{"state", "begin"}}, "G"));
    auto r = e.run_until_round_end();
    CHECK(r.firings == 2);
    const auto& log = e.log();
    REQUIRE(log.size() == 4);
    CHECK(log[2].kind == TraceKind::set_buffer_chunk_from_spec);
    CHECK(log[2].time == SimTime::from_ms(250));
    CHECK(log[2].text == "IMAGINAL ");
    CHECK(log[3].time == SimTime::from_ms(300));
}

TEST_CASE("write to a busy imaginal buffer fails")
{
    auto write = RequestImaginalWrite{
        [](const ActionContext&) { return make_chunk(ChunkType::decision_merits, {{"x", 1.0}}); }};
    std::vector<Production> rules = {
        rule("W1", {goal_is("state", "begin")}, {write, set_goal_slot("state", "again")}),
        rule("W2", {goal_is("state", "again")}, {write}),
    };
    Engine e(rules, quiet());
    e.set_goal(make_chunk(ChunkType::goal, {{"state", "begin"}}, "G"));
    CHECK(code_of([&] { e.run_until_round_end(); }) == Errc::buffer_busy);
}

TEST_CASE("deadlock and step limit")
{
    std::vector<Production> stuck = {rule("ONLY", {goal_is("state", "begin")}, {set_goal_slot("state", "nowhere")})};
    Engine e(stuck, quiet());
    e.set_goal(make_chunk(ChunkType::goal, {{"state", "begin"}}, "G"));
    try {
        e.run_until_round_end();
        FAIL("expected deadlock");
    } catch (const Error& err) {
        CHECK(err.code() == Errc::deadlock);
        CHECK(std::string(err.what()).find("state=nowhere") != std::string::npos);
    }

    std::vector<Production> loop = {rule("SPIN", {}, {})};
    EngineConfig cfg = quiet();
    cfg.step_limit = 25;
    Engine l(loop, cfg);
    l.set_goal(make_chunk(ChunkType::goal, {{"state", "begin"}}, "G"));
    CHECK(code_of([&] { l.run_until_round_end(); }) == Errc::step_limit_exceeded);
    CHECK(l.now() == SimTime::from_ms(25 * 50));
}

TEST_CASE("duplicate production names are rejected")
{
    std::vector<Production> rules = {rule("X", {}, {}), rule("X", {}, {})};
    CHECK(code_of([&] { Engine e(rules, quiet()); }) == Errc::invalid_argument);
}

TEST_CASE("same seed gives the same trace")
{
    auto run = [](std::uint64_t seed) {
        EngineConfig cfg;
        cfg.rng_seed = seed;
        const auto inst = ProblemInstance::base();
        Engine e(build_persona_rules(inst), cfg);
        init_run(e, inst);
        for (int t = 0; t < 6; ++t) run_trial(e, inst, TaskModels{}, "r", 0, t);
        return e.log();
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}

TEST_CASE("utilities persist across rounds and reset on demand")
{
    auto e = testsupport::scripted_replay();
    CHECK(e.production("STOP").utility == double(0.91959995f));
    CHECK(e.production("DECIDE-BRUTE").utility == double(1.96f));
    e.reset_utilities();
    CHECK(e.production("STOP").utility == 0.0);
    CHECK(e.production("DECIDE-BRUTE").utility == 3.0);
}
