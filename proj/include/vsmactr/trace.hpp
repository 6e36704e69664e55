#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vsmactr/sim_time.hpp"

namespace vsmactr {

enum class TraceModule { goal, procedural, imaginal };
enum class TraceKind {
    set_buffer_chunk,
    production_fired,
    set_buffer_chunk_from_spec,
    output,
    utility_update,
    reward,
};

std::string_view module_label(TraceModule m) noexcept;
std::string_view kind_label(TraceKind k) noexcept;

/// One engine action. Which payload fields are meaningful depends on `kind`:
///   production_fired            name
///   set_buffer_chunk[_from_spec] text (buffer arguments, verbatim)
///   output                      text
///   reward                      reward, alpha
///   utility_update              name, u_prev, reward, dt, r_eff, u_new
struct TraceEvent {
    SimTime time{};
    TraceModule module = TraceModule::procedural;
    TraceKind kind = TraceKind::output;
    std::string name;
    std::string text;
    double u_prev = 0.0;
    double reward = 0.0;
    double dt = 0.0;
    double r_eff = 0.0;
    double u_new = 0.0;
    double alpha = 0.0;

    static TraceEvent fired(SimTime t, std::string production);
    static TraceEvent buffer_set(SimTime t, TraceModule m, TraceKind k, std::string args);
    static TraceEvent output(SimTime t, std::string text);
    static TraceEvent reward_header(SimTime t, double reward, double alpha);
    static TraceEvent utility(SimTime t, std::string production, double u_prev, double reward, double dt,
                              double r_eff, double u_new);

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using TraceLog = std::vector<TraceEvent>;

/// Checks every utility update against U(n) = U(n-1) + alpha (R(n) - U(n-1)),
/// alpha taken from the preceding reward header, and R(n) = reward - dt.
/// Returns one message per violation (empty when the log is consistent).
std::vector<std::string> audit_utility_updates(const TraceLog& log, double tolerance = 1e-6);

} // namespace vsmactr
