#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace tmlab::sim {

// Virtual time: microseconds since the start of a run. Durations and
// instants share the type; the run epoch is always zero.
using SimTime = std::chrono::microseconds;
using SimDuration = std::chrono::microseconds;

constexpr SimDuration micros(std::int64_t us) { return SimDuration(us); }
constexpr SimDuration millis(std::int64_t ms) { return SimDuration(ms * 1000); }
constexpr SimDuration secs(std::int64_t s) { return SimDuration(s * 1000000); }
inline SimDuration secs_f(double s) { return SimDuration(static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))); }

inline double to_seconds(SimDuration d) { return static_cast<double>(d.count()) / 1e6; }

}  // namespace tmlab::sim
