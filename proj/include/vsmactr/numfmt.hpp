#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "vsmactr/sim_time.hpp"

namespace vsmactr::numfmt {

// Shortest decimal that round-trips through a 32-bit float, with a trailing
// ".0" on integral values (Lisp single-float style: "3.0", "-0.45000002").
std::string lisp_float(float v);

// Same convention for doubles.
std::string lisp_double(double v);

// Renders a utility-trace number: single-precision form when the value is
// exactly representable as a float, double-precision form otherwise.
std::string trace_number(double v);

// Inverse of trace_number for any text it produced.
std::optional<double> parse_trace_number(std::string_view text);

// Shortest round-trip decimal for a double (no forced ".0").
std::string shortest(double v);

// Exact parse of a whole string (from_chars); nullopt on trailing junk.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

// Fixed 3-decimal seconds, e.g. 50 ms -> "0.050".
std::string seconds3(SimTime t);

// Parses "<digits>.<3 digits>"; nullopt if malformed.
std::optional<SimTime> parse_seconds3(std::string_view text);

// Fixed `decimals` places with trailing zeros (and a bare '.') stripped:
// 88.000 -> "88", 80.100 -> "80.1".
std::string trimmed_fixed(double v, int decimals);

} // namespace vsmactr::numfmt
