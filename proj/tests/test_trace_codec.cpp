#include <doctest.h>

#include <regex>

#include "support.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/trace_codec.hpp"

using namespace vsmactr;

namespace {

std::vector<std::string> split_lines(const std::string& s)
{
    std::vector<std::string> out;
    std::size_t b = 0;
    while (b < s.size()) {
        auto e = s.find('\n', b);
        out.push_back(s.substr(b, e - b));
        b = e + 1;
    }
    return out;
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

const std::string golden = testsupport::read_file(testsupport::fixture_path("golden_trace.txt"));

} // namespace

TEST_CASE("golden file is present")
{
    REQUIRE(golden.size() > 1000);
    CHECK(golden.back() == '\n');
}

TEST_CASE("golden round trip is byte identical")
{
    auto log = parse_string(golden);
    CHECK(emit_string(log) == golden);
    CHECK(audit_utility_updates(log).empty());
    int updates = 0;
    for (const auto& e : log) updates += e.kind == TraceKind::utility_update ? 1 : 0;
    CHECK(updates == 22);
}

TEST_CASE("first golden line")
{
    auto log = parse_string("0.000   GOAL                   SET-BUFFER-CHUNK GOAL GOER NIL\n");
    REQUIRE(log.size() == 1);
    CHECK(log[0].kind == TraceKind::set_buffer_chunk);
    CHECK(log[0].module == TraceModule::goal);
    CHECK(log[0].time == SimTime::from_ms(0));
    CHECK(log[0].text == "GOAL GOER NIL");
}

TEST_CASE("production fired layout")
{
    TraceLog log = {TraceEvent::fired(SimTime::from_ms(50), "CHOOSE-STRATEGY")};
    auto text = emit_text(log);
    REQUIRE(text.size() == 1);
    CHECK(text[0] == "0.050   PROCEDURAL             PRODUCTION-FIRED CHOOSE-STRATEGY");
    TraceLog late = {TraceEvent::fired(SimTime::from_ms(12345), "X")};
    CHECK(emit_text(late)[0] == "12.345  PROCEDURAL             PRODUCTION-FIRED X");
    CHECK(parse_text(emit_text(late)) == late);
}

TEST_CASE("empty log")
{
    CHECK(emit_text({}).empty());
    CHECK(emit_string({}).empty());
    CHECK(parse_string("").empty());
}

TEST_CASE("malformed input")
{
    CHECK(code_of([] { parse_string("abc PROCEDURAL             PRODUCTION-FIRED X\n"); }) ==
          Errc::malformed_timestamp);
    CHECK(code_of([] { parse_string("0.05 PROCEDURAL PRODUCTION-FIRED X\n"); }) == Errc::malformed_timestamp);
    CHECK(code_of([] { parse_string("Updating utility of production STOP\nU(n-1) = 0.0   R(n) = -2.05 [-2.0 - 0.05 "
                                    "seconds since selection]\n"); }) == Errc::truncated_utility_block);
    CHECK(code_of([] { parse_string("Updating utility of production STOP\nhello\nU(n) = 1.0\n"); }) ==
          Errc::truncated_utility_block);
}

TEST_CASE("unknown lines become output events")
{
    auto log = parse_string("0.100   PROCEDURAL             PRODUCTION-FIRED A\nsome free text\n\n");
    REQUIRE(log.size() == 3);
    CHECK(log[1].kind == TraceKind::output);
    CHECK(log[1].text == "some free text");
    CHECK(log[1].time == SimTime::from_ms(100));
    CHECK(log[2].text.empty());
}

TEST_CASE("replay matches the golden trace apart from printed task numbers")
{
    auto engine = testsupport::scripted_replay();
    const auto mine = split_lines(emit_string(engine.log()));
    const auto ref = split_lines(golden);
    REQUIRE(mine.size() == ref.size());
    const std::regex number_line(R"(-?[0-9]+\.[0-9]+(e-?[0-9]+)? )");
    int numeric = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CAPTURE(i);
        if (std::regex_match(ref[i], number_line)) {
            ++numeric;
            CHECK(std::regex_match(mine[i], number_line));
        } else {
            CHECK(mine[i] == ref[i]);
        }
    }
    CHECK(numeric == 9);
}

TEST_CASE("engine traces survive text and json round trips")
{
    std::vector<ProblemInstance> sets = {ProblemInstance::base(), testsupport::replay_instance()};
    BatchConfig cfg;
    cfg.runs_per_set = 2;
    auto batch = run_batch(sets, cfg);
    for (const auto& t : batch.traces) {
        auto back = parse_string(emit_string(t.log));
        CHECK(back == t.log);
        CHECK(audit_utility_updates(back).empty());
        CHECK(from_jsonl(to_jsonl(t.log)) == t.log);
    }

    cfg.engine.precision = UtilityPrecision::double_precision;
    cfg.engine.alpha = 0.3;
    auto dbl = run_batch(sets, cfg);
    for (const auto& t : dbl.traces) {
        CHECK(from_jsonl(to_jsonl(t.log)) == t.log);
        CHECK(audit_utility_updates(parse_string(emit_string(t.log))).empty());
    }
}

TEST_CASE("bad jsonl")
{
    CHECK(code_of([] { from_jsonl("{\"time_ms\":1}\n"); }) == Errc::parse_error);
    CHECK(code_of([] { from_jsonl("not json\n"); }) == Errc::parse_error);
    CHECK(code_of([] { from_jsonl(R"({"time_ms":0,"module":"MOTOR","kind":"OUTPUT"})"); }) == Errc::parse_error);
}

TEST_CASE("distillation codes")
{
    std::vector<DecisionOutcome> o = {
        {"r", 0, 0, 0, 2, 6.0, 0.01},
        {"r", 0, 1, 1, 0, -2.0, 0.02},
        {"r", 0, 2, 1, 2, 4.0, 0.02},
    };
    auto multi = distill_selected(o, FacetMode::multi);
    CHECK(multi.targets() == std::vector<int>{2, 3, 5});
    auto single = distill_selected(o, FacetMode::single);
    CHECK(single.targets() == std::vector<int>{0, 1, 1});
    CHECK(single.records[2].compound_code == 5);
    for (int code = 0; code < 6; ++code) CHECK(compound_code(section_of(code), strategy_of(code)) == code);

    CHECK(code_of([] { distill_selected({}, FacetMode::single); }) == Errc::invalid_argument);
    o[0].strategy = 3;
    CHECK(code_of([&] { distill_selected(o, FacetMode::single); }) == Errc::invalid_argument);
    CHECK(parse_facet("multi") == FacetMode::multi);
    CHECK(code_of([] { parse_facet("both"); }) == Errc::invalid_argument);
}

TEST_CASE("selected csv round trip")
{
    std::vector<DecisionOutcome> o = {
        {"s00-r0", 0, 0, 1, 2, 6.0, 0.01},
        {"s00-r0", 0, 1, 0, 0, -2.0, 0.02},
        {"s01-r1", 1, 1, 1, 1, 4.0, 0.02},
    };
    for (auto mode : {FacetMode::single, FacetMode::multi}) {
        const auto st = distill_selected(o, mode);
        const auto text = format_selected_csv(st);
        CHECK(text.rfind(std::string("# mode=") + std::string(facet_name(mode)) + "\n", 0) == 0);
        const auto back = parse_selected_csv(text);
        CHECK(back.mode == st.mode);
        CHECK(back.records == st.records);
    }
    const auto text = format_selected_csv(distill_selected(o, FacetMode::single));
    CHECK(code_of([] { parse_selected_csv("run_id,trial\n"); }) == Errc::parse_error);
    // a target that disagrees with the mode
    std::string bad = text;
    bad.replace(bad.rfind(",1\n"), 3, ",4\n");
    CHECK(code_of([&] { parse_selected_csv(bad); }) == Errc::parse_error);
}

TEST_CASE("replay splits into one round per trial")
{
    auto engine = testsupport::scripted_replay();
    const auto& log = engine.log();
    const auto rounds = split_trials(log);
    REQUIRE(rounds.size() == 3);
    TraceLog joined;
    for (const auto& r : rounds) {
        CHECK_FALSE(r.empty());
        joined.insert(joined.end(), r.begin(), r.end());
    }
    CHECK(joined == log);
    // every round closes with its utility updates
    for (const auto& r : rounds) CHECK(r.back().kind == TraceKind::utility_update);
    CHECK(split_trials(TraceLog{}).empty());
}

TEST_CASE("time column stripping")
{
    CHECK(strip_time_column("0.050   PROCEDURAL             PRODUCTION-FIRED DECIDE-BRUTE") ==
          "PROCEDURAL             PRODUCTION-FIRED DECIDE-BRUTE");
    CHECK(strip_time_column("0.02 ") == "0.02 ");
    CHECK(strip_time_column("assembly is always a good place to reduce time!") ==
          "assembly is always a good place to reduce time!");
    CHECK(strip_time_column("") == "");
}
