#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace lcsim {

/// Simulation clock in integer nanoseconds, so delay arithmetic is exact.
struct SimTime
{
    std::int64_t ns = 0;

    static constexpr SimTime from_ns(std::int64_t v) { return SimTime{v}; }
    static SimTime from_seconds(double s) { return SimTime{std::llround(s * 1e9)}; }

    double seconds() const { return static_cast<double>(ns) / 1e9; }

    auto operator<=>(const SimTime&) const = default;

    SimTime& operator+=(SimTime o)
    {
        ns += o.ns;
        return *this;
    }
    friend SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ns + b.ns}; }
    friend SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ns - b.ns}; }
    friend SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.ns * k}; }
};

} // namespace lcsim
