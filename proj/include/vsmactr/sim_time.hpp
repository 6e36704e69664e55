#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace vsmactr {

/// Simulation clock value with millisecond resolution.
struct SimTime {
    std::int64_t ms = 0;

    static constexpr SimTime from_ms(std::int64_t v) { return SimTime{v}; }
    static SimTime from_seconds(double s) { return SimTime{static_cast<std::int64_t>(std::llround(s * 1000.0))}; }

    double seconds() const { return static_cast<double>(ms) / 1000.0; }
    // single-precision view used by the utility arithmetic
    float seconds_f() const { return static_cast<float>(ms) / 1000.0f; }

    friend constexpr SimTime operator+(SimTime a, SimTime b) { return {a.ms + b.ms}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return {a.ms - b.ms}; }
    SimTime& operator+=(SimTime o) { ms += o.ms; return *this; }
    friend constexpr auto operator<=>(SimTime, SimTime) = default;
};

} // namespace vsmactr
