#include "vsmactr/trace.hpp"

#include <cmath>
#include <optional>

#include "vsmactr/numfmt.hpp"

namespace vsmactr {

std::string_view module_label(TraceModule m) noexcept
{
    switch (m) {
    case TraceModule::goal: return "GOAL";
    case TraceModule::procedural: return "PROCEDURAL";
    case TraceModule::imaginal: return "IMAGINAL";
    }
    return "?";
}

std::string_view kind_label(TraceKind k) noexcept
{
    switch (k) {
    case TraceKind::set_buffer_chunk: return "SET-BUFFER-CHUNK";
    case TraceKind::production_fired: return "PRODUCTION-FIRED";
    case TraceKind::set_buffer_chunk_from_spec: return "SET-BUFFER-CHUNK-FROM-SPEC";
    case TraceKind::output: return "OUTPUT";
    case TraceKind::utility_update: return "UTILITY-UPDATE";
    case TraceKind::reward: return "REWARD";
    }
    return "?";
}

TraceEvent TraceEvent::fired(SimTime t, std::string production)
{
    TraceEvent e;
    e.time = t;
    e.module = TraceModule::procedural;
    e.kind = TraceKind::production_fired;
    e.name = std::move(production);
    return e;
}

TraceEvent TraceEvent::buffer_set(SimTime t, TraceModule m, TraceKind k, std::string args)
{
    TraceEvent e;
    e.time = t;
    e.module = m;
    e.kind = k;
    e.text = std::move(args);
    return e;
}

TraceEvent TraceEvent::output(SimTime t, std::string text)
{
    TraceEvent e;
    e.time = t;
    e.kind = TraceKind::output;
    e.text = std::move(text);
    return e;
}

TraceEvent TraceEvent::reward_header(SimTime t, double reward, double alpha)
{
    TraceEvent e;
    e.time = t;
    e.kind = TraceKind::reward;
    e.reward = reward;
    e.alpha = alpha;
    return e;
}

TraceEvent TraceEvent::utility(SimTime t, std::string production, double u_prev, double reward, double dt,
                               double r_eff, double u_new)
{
    TraceEvent e;
    e.time = t;
    e.kind = TraceKind::utility_update;
    e.name = std::move(production);
    e.u_prev = u_prev;
    e.reward = reward;
    e.dt = dt;
    e.r_eff = r_eff;
    e.u_new = u_new;
    return e;
}

std::vector<std::string> audit_utility_updates(const TraceLog& log, double tolerance)
{
    std::vector<std::string> problems;
    std::optional<double> alpha;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& e = log[i];
        if (e.kind == TraceKind::reward) {
            alpha = e.alpha;
            continue;
        }
        if (e.kind != TraceKind::utility_update) continue;
        const auto where = "event " + std::to_string(i) + " (" + e.name + ")";
        if (!alpha) {
            problems.push_back(where + ": utility update without a preceding reward header");
            continue;
        }
        const double expected = e.u_prev + *alpha * (e.r_eff - e.u_prev);
        if (!std::isfinite(e.u_new) || std::abs(expected - e.u_new) > tolerance) {
            problems.push_back(where + ": U(n) = " + numfmt::trace_number(e.u_new) + ", recurrence gives " +
                               numfmt::shortest(expected));
        }
        if (std::abs((e.reward - e.dt) - e.r_eff) > tolerance) {
            problems.push_back(where + ": R(n) = " + numfmt::trace_number(e.r_eff) + " but reward - dt = " +
                               numfmt::shortest(e.reward - e.dt));
        }
    }
    return problems;
}

} // namespace vsmactr
