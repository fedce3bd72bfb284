#include "fcml/sampling.hpp"

#include <numeric>

namespace fcml {

int n_dis(int levels) {
    require(levels >= 3, "levels must be >= 3");
    return levels % 2 == 0 ? 2 * (levels - 1) : levels - 1;
}

MsSelection try_select_ms(int levels, int ns) {
    MsSelection out;
    if (levels < 3) {
        out.reason = "levels must be >= 3";
        return out;
    }
    if (ns < 1) {
        out.reason = "Ns must be >= 1";
        return out;
    }
    const bool even = levels % 2 == 0;
    const int modulus = even ? 2 * (levels - 1) : levels - 1;
    const int g = std::gcd(ns, modulus);
    if (g != 1) {
        out.reason = "gcd(Ns=" + std::to_string(ns) + ", " + std::to_string(modulus) +
                     ") = " + std::to_string(g) + " != 1; the schedule would visit only " +
                     std::to_string(modulus / g) + " of " + std::to_string(n_dis(levels)) +
                     " sampling phases";
        return out;
    }
    out.ms = even ? ns : 2 * ns;
    return out;
}

int select_ms(int levels, int ns) {
    const auto sel = try_select_ms(levels, ns);
    if (!sel.accepted()) {
        throw ValidationError("sampling: " + sel.reason);
    }
    return *sel.ms;
}

void grid_extremum(int levels, int g, int& carrier, Extremum& kind) {
    const int steps = 2 * (levels - 1);
    require(g >= 0 && g < steps, "grid index out of range");
    if (g % 2 == 0) {
        carrier = g / 2 + 1;
        kind = Extremum::Valley;
        return;
    }
    // Carrier k peaks half a period (N-1 half-steps) after its valley at 2(k-1).
    // An odd g can only occur when N-1 is odd, i.e. N even.
    const int shifted = ((g - (levels - 1)) % steps + steps) % steps;
    carrier = shifted / 2 + 1;
    kind = Extremum::Peak;
}

SamplingSchedule::SamplingSchedule(int levels, int ns, double switching_frequency)
    : levels_(levels),
      ns_(ns),
      ms_(select_ms(levels, ns)),
      ndis_(n_dis(levels)),
      fsw_(switching_frequency) {
    require(switching_frequency > 0.0, "switching frequency must be > 0");
}

double SamplingSchedule::period() const {
    return static_cast<double>(ms_) / (2.0 * static_cast<double>(levels_ - 1) * fsw_);
}

double SamplingSchedule::frequency() const {
    return 2.0 * static_cast<double>(levels_ - 1) * fsw_ / static_cast<double>(ms_);
}

SampleInstant SamplingSchedule::instant(std::int64_t n) const {
    require(n >= 0, "sample index must be >= 0");
    const std::int64_t steps = 2 * static_cast<std::int64_t>(levels_ - 1);
    SampleInstant s;
    s.index = n;
    s.half_steps = n * ms_;
    s.time = static_cast<double>(s.half_steps) / (static_cast<double>(steps) * fsw_);
    s.grid_index = static_cast<int>(s.half_steps % steps);
    // Odd N only ever lands on even grid indices (ms is even), so halve them.
    s.phase = levels_ % 2 == 0 ? s.grid_index : s.grid_index / 2;
    grid_extremum(levels_, s.grid_index, s.carrier, s.kind);
    return s;
}

}  // namespace fcml
