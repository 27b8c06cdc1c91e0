#pragma once

#include <cmath>
#include <cstdint>

namespace nicpool {

// Virtual time in integer nanoseconds. All scheduling arithmetic stays
// integral so identical runs produce identical event orderings.
using SimTime = std::int64_t;

constexpr SimTime kUsec = 1'000;
constexpr SimTime kMsec = 1'000'000;
constexpr SimTime kSec = 1'000'000'000;

inline SimTime us_to_time(double us) { return static_cast<SimTime>(std::llround(us * 1e3)); }
inline SimTime ms_to_time(double ms) { return static_cast<SimTime>(std::llround(ms * 1e6)); }
inline double time_to_us(SimTime t) { return static_cast<double>(t) / 1e3; }
inline double time_to_ms(SimTime t) { return static_cast<double>(t) / 1e6; }
inline double time_to_sec(SimTime t) { return static_cast<double>(t) / 1e9; }

// 1 Gbps == 1 bit per nanosecond, so rates fall out of bit/ns ratios.
inline double gbps(std::int64_t bits, SimTime elapsed) {
    return elapsed > 0 ? static_cast<double>(bits) / static_cast<double>(elapsed) : 0.0;
}

// Wire time for `bytes` at `rate_gbps`, rounded to whole ns.
inline SimTime serialization_time(std::int64_t bytes, double rate_gbps) {
    if (rate_gbps <= 0.0) return 0;
    return static_cast<SimTime>(std::llround(static_cast<double>(bytes) * 8.0 / rate_gbps));
}

}  // namespace nicpool
