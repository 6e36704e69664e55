#include "vsmactr/trace_codec.hpp"

#include <json.hpp>
#include <optional>
#include <sstream>

#include "vsmactr/csv.hpp"
#include "vsmactr/error.hpp"
#include "vsmactr/numfmt.hpp"

namespace vsmactr {

namespace {

constexpr std::string_view kRewardPrefix = "Utility updates with Reward = ";
constexpr std::string_view kAlphaSep = "   alpha = ";
constexpr std::string_view kUpdatePrefix = "Updating utility of production ";
constexpr std::string_view kPrevPrefix = "U(n-1) = ";
constexpr std::string_view kEffSep = "   R(n) = ";
constexpr std::string_view kNewPrefix = "U(n) = ";
constexpr std::string_view kSinceSuffix = " seconds since selection]";

bool is_timed(TraceKind k)
{
    return k == TraceKind::set_buffer_chunk || k == TraceKind::production_fired ||
           k == TraceKind::set_buffer_chunk_from_spec;
}

void pad_to(std::string& s, std::size_t width)
{
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    } else {
        s.push_back(' ');
    }
}

std::optional<TraceModule> module_from(std::string_view s)
{
    for (auto m : {TraceModule::goal, TraceModule::procedural, TraceModule::imaginal}) {
        if (module_label(m) == s) return m;
    }
    return std::nullopt;
}

std::optional<TraceKind> kind_from(std::string_view s)
{
    for (auto k : {TraceKind::set_buffer_chunk, TraceKind::production_fired, TraceKind::set_buffer_chunk_from_spec,
                   TraceKind::output, TraceKind::utility_update, TraceKind::reward}) {
        if (kind_label(k) == s) return k;
    }
    return std::nullopt;
}

struct Token {
    std::string_view text;
    std::size_t end = 0;
};

std::optional<Token> next_token(std::string_view line, std::size_t from)
{
    std::size_t b = line.find_first_not_of(' ', from);
    if (b == std::string_view::npos) return std::nullopt;
    std::size_t e = line.find(' ', b);
    if (e == std::string_view::npos) e = line.size();
    return Token{line.substr(b, e - b), e};
}

std::optional<double> number_between(std::string_view line, std::string_view prefix, std::string_view suffix,
                                     std::size_t& pos)
{
    if (line.substr(pos, prefix.size()) != prefix) return std::nullopt;
    pos += prefix.size();
    const std::size_t end = suffix.empty() ? line.size() : line.find(suffix, pos);
    if (end == std::string_view::npos) return std::nullopt;
    auto v = numfmt::parse_trace_number(line.substr(pos, end - pos));
    pos = end;
    return v;
}

std::optional<std::pair<double, double>> parse_reward_line(std::string_view line)
{
    std::size_t pos = 0;
    auto reward = number_between(line, kRewardPrefix, kAlphaSep, pos);
    if (!reward) return std::nullopt;
    auto alpha = number_between(line, kAlphaSep, {}, pos);
    if (!alpha) return std::nullopt;
    return std::pair{*reward, *alpha};
}

// "U(n-1) = a   R(n) = b [c - d seconds since selection]"
bool parse_prev_line(std::string_view line, TraceEvent& e)
{
    std::size_t pos = 0;
    auto u_prev = number_between(line, kPrevPrefix, kEffSep, pos);
    if (!u_prev) return false;
    auto r_eff = number_between(line, kEffSep, " [", pos);
    if (!r_eff) return false;
    auto reward = number_between(line, " [", " - ", pos);
    if (!reward) return false;
    auto dt = number_between(line, " - ", kSinceSuffix, pos);
    if (!dt || pos + kSinceSuffix.size() != line.size()) return false;
    e.u_prev = *u_prev;
    e.r_eff = *r_eff;
    e.reward = *reward;
    e.dt = *dt;
    return true;
}

bool parse_new_line(std::string_view line, TraceEvent& e)
{
    std::size_t pos = 0;
    auto u = number_between(line, kNewPrefix, {}, pos);
    if (!u) return false;
    e.u_new = *u;
    return true;
}

} // namespace

TraceText emit_text(const TraceLog& log)
{
    using numfmt::trace_number;
    TraceText out;
    out.reserve(log.size());
    for (const auto& e : log) {
        if (is_timed(e.kind)) {
            std::string line = numfmt::seconds3(e.time);
            pad_to(line, kTimeColumnWidth);
            line += module_label(e.module);
            pad_to(line, kTimeColumnWidth + kModuleColumnWidth);
            line += kind_label(e.kind);
            const std::string& payload = e.kind == TraceKind::production_fired ? e.name : e.text;
            line += ' ';
            line += payload;
            out.push_back(std::move(line));
            continue;
        }
        switch (e.kind) {
        case TraceKind::output: out.push_back(e.text); break;
        case TraceKind::reward:
            out.push_back(std::string(kRewardPrefix) + trace_number(e.reward) + std::string(kAlphaSep) +
                          trace_number(e.alpha));
            break;
        case TraceKind::utility_update:
            out.push_back(std::string(kUpdatePrefix) + e.name);
            out.push_back(std::string(kPrevPrefix) + trace_number(e.u_prev) + std::string(kEffSep) +
                          trace_number(e.r_eff) + " [" + trace_number(e.reward) + " - " + trace_number(e.dt) +
                          std::string(kSinceSuffix));
            out.push_back(std::string(kNewPrefix) + trace_number(e.u_new));
            break;
        default: break;
        }
    }
    return out;
}

std::string emit_string(const TraceLog& log)
{
    std::string s;
    for (const auto& line : emit_text(log)) {
        s += line;
        s += '\n';
    }
    return s;
}

TraceLog parse_text(std::span<const std::string> lines)
{
    TraceLog log;
    SimTime clock{};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        const auto t1 = next_token(line, 0);
        const auto t2 = t1 ? next_token(line, t1->end) : std::nullopt;
        const auto t3 = t2 ? next_token(line, t2->end) : std::nullopt;
        const auto module = t2 ? module_from(t2->text) : std::nullopt;
        const auto kind = t3 ? kind_from(t3->text) : std::nullopt;
        if (module && kind && is_timed(*kind)) {
            const auto time = numfmt::parse_seconds3(t1->text);
            if (!time) {
                throw Error(Errc::malformed_timestamp,
                            "line " + std::to_string(i + 1) + ": '" + std::string(t1->text) + "'");
            }
            clock = *time;
            std::string payload;
            if (t3->end < line.size()) payload = std::string(line.substr(t3->end + 1));
            if (*kind == TraceKind::production_fired) {
                log.push_back(TraceEvent::fired(clock, std::move(payload)));
            } else {
                log.push_back(TraceEvent::buffer_set(clock, *module, *kind, std::move(payload)));
            }
            continue;
        }
        if (line.starts_with(kRewardPrefix)) {
            if (auto r = parse_reward_line(line)) {
                log.push_back(TraceEvent::reward_header(clock, r->first, r->second));
                continue;
            }
        }
        if (line.starts_with(kUpdatePrefix)) {
            TraceEvent e = TraceEvent::utility(clock, std::string(line.substr(kUpdatePrefix.size())), 0, 0, 0, 0, 0);
            if (i + 2 >= lines.size() || !parse_prev_line(lines[i + 1], e) || !parse_new_line(lines[i + 2], e)) {
                throw Error(Errc::truncated_utility_block,
                            "line " + std::to_string(i + 1) + ": utility block for " + e.name + " is incomplete");
            }
            log.push_back(std::move(e));
            i += 2;
            continue;
        }
        log.push_back(TraceEvent::output(clock, std::string(line)));
    }
    return log;
}

TraceLog parse_string(std::string_view text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return parse_text(lines);
}

std::string to_jsonl(const TraceLog& log)
{
    std::string out;
    for (const auto& e : log) {
        nlohmann::ordered_json j;
        j["time_ms"] = e.time.ms;
        j["module"] = module_label(e.module);
        j["kind"] = kind_label(e.kind);
        switch (e.kind) {
        case TraceKind::production_fired: j["name"] = e.name; break;
        case TraceKind::set_buffer_chunk:
        case TraceKind::set_buffer_chunk_from_spec:
        case TraceKind::output: j["text"] = e.text; break;
        case TraceKind::reward:
            j["reward"] = e.reward;
            j["alpha"] = e.alpha;
            break;
        case TraceKind::utility_update:
            j["name"] = e.name;
            j["u_prev"] = e.u_prev;
            j["reward"] = e.reward;
            j["dt"] = e.dt;
            j["r_eff"] = e.r_eff;
            j["u_new"] = e.u_new;
            break;
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

TraceLog from_jsonl(std::string_view text)
{
    TraceLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TraceEvent e;
            e.time = SimTime::from_ms(j.at("time_ms").get<std::int64_t>());
            const auto m = module_from(j.at("module").get<std::string>());
            const auto k = kind_from(j.at("kind").get<std::string>());
            if (!m || !k) throw Error(Errc::parse_error, "unknown module or kind");
            e.module = *m;
            e.kind = *k;
            e.name = j.value("name", "");
            e.text = j.value("text", "");
            e.u_prev = j.value("u_prev", 0.0);
            e.reward = j.value("reward", 0.0);
            e.dt = j.value("dt", 0.0);
            e.r_eff = j.value("r_eff", 0.0);
            e.u_new = j.value("u_new", 0.0);
            e.alpha = j.value("alpha", 0.0);
            log.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(Errc::parse_error, "trace jsonl line " + std::to_string(n) + ": " + ex.what());
        }
    }
    return log;
}

std::string_view facet_name(FacetMode m) noexcept { return m == FacetMode::single ? "single" : "multi"; }

FacetMode parse_facet(std::string_view s)
{
    if (s == "single") return FacetMode::single;
    if (s == "multi") return FacetMode::multi;
    throw Error(Errc::invalid_argument, "mode must be single or multi, got " + std::string(s));
}

std::vector<int> SelectedTrace::targets() const
{
    std::vector<int> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = target(i);
    return out;
}

SelectedTrace distill_selected(std::span<const DecisionOutcome> outcomes, FacetMode mode)
{
    if (outcomes.empty()) throw Error(Errc::invalid_argument, "no outcomes to distill");
    SelectedTrace st;
    st.mode = mode;
    st.records.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (o.section < 0 || o.section > 1 || o.strategy < 0 || o.strategy > 2) {
            throw Error(Errc::invalid_argument, "outcome " + o.run_id + "/" + std::to_string(o.trial_index) +
                                                    " has out-of-range codes");
        }
        st.records.push_back(
            SelectedRecord{o.run_id, o.trial_index, o.section, o.strategy, compound_code(o.section, o.strategy)});
    }
    return st;
}

std::string format_selected_csv(const SelectedTrace& st)
{
    std::string out = "# mode=" + std::string(facet_name(st.mode)) + "\n";
    out += csv::format_row({"run_id", "trial", "section", "strategy", "compound", "target"});
    for (std::size_t i = 0; i < st.records.size(); ++i) {
        const auto& r = st.records[i];
        out += csv::format_row({r.run_id, std::to_string(r.trial_index), std::to_string(r.section_code),
                                std::to_string(r.strategy_code), std::to_string(r.compound_code),
                                std::to_string(st.target(i))});
    }
    return out;
}

SelectedTrace parse_selected_csv(std::string_view text)
{
    constexpr std::string_view prefix = "# mode=";
    const auto nl = text.find('\n');
    if (!text.starts_with(prefix) || nl == std::string_view::npos) {
        throw Error(Errc::parse_error, "selected trace: missing mode line");
    }
    SelectedTrace st;
    try {
        st.mode = parse_facet(text.substr(prefix.size(), nl - prefix.size()));
    } catch (const Error& e) {
        throw Error(Errc::parse_error, e.what());
    }
    const auto rows = csv::parse(text.substr(nl + 1));
    if (rows.empty() || rows[0] != csv::Row{"run_id", "trial", "section", "strategy", "compound", "target"}) {
        throw Error(Errc::parse_error, "selected trace: wrong header");
    }
    auto num = [](const std::string& s) {
        const auto v = numfmt::parse_int(s);
        if (!v || *v < 0 || *v > 1000000) throw Error(Errc::parse_error, "selected trace: bad number '" + s + "'");
        return static_cast<int>(*v);
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 6) throw Error(Errc::parse_error, "selected trace row " + std::to_string(i) + ": 6 fields expected");
        SelectedRecord rec{r[0], num(r[1]), num(r[2]), num(r[3]), num(r[4])};
        if (rec.section_code > 1 || rec.strategy_code > 2 ||
            rec.compound_code != compound_code(rec.section_code, rec.strategy_code)) {
            throw Error(Errc::parse_error, "selected trace row " + std::to_string(i) + ": inconsistent codes");
        }
        st.records.push_back(std::move(rec));
        if (st.target(st.records.size() - 1) != num(r[5])) {
            throw Error(Errc::parse_error, "selected trace row " + std::to_string(i) + ": target does not match mode");
        }
    }
    return st;
}

std::vector<TraceLog> split_trials(const TraceLog& log)
{
    std::vector<TraceLog> out;
    TraceLog cur;
    bool in_updates = false;
    for (const auto& ev : log) {
        const bool update = ev.kind == TraceKind::utility_update;
        if (in_updates && !update) {
            out.push_back(std::move(cur));
            cur.clear();
        }
        in_updates = update;
        cur.push_back(ev);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string strip_time_column(std::string_view line)
{
    // printed numbers such as "0.02 " are output lines, not timestamps
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos || !numfmt::parse_seconds3(line.substr(0, sp))) return std::string(line);
    const auto rest = line.find_first_not_of(' ', sp);
    if (rest == std::string_view::npos) return std::string(line);
    return std::string(line.substr(rest));
}

} // namespace vsmactr
