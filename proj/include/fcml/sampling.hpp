#pragma once

// Disjoint sampling. The sampling period is an integer multiple of the half
// carrier step tau_sw / (2(N-1)), chosen so consecutive interrupts walk over
// every distinct carrier peak/valley before repeating.

#include "fcml/common.hpp"
#include "fcml/modulation.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace fcml {

/// Number of distinct sampling instants per cycle: 2(N-1) for even N, N-1 for odd N.
[[nodiscard]] int n_dis(int levels);

struct MsSelection {
    std::optional<int> ms;  ///< empty when rejected
    std::string reason;     ///< why the request was rejected

    [[nodiscard]] bool accepted() const { return ms.has_value(); }
};

/// Applies the gcd rule; never throws for Ns >= 1.
[[nodiscard]] MsSelection try_select_ms(int levels, int ns);

/// Same as try_select_ms but throws ValidationError on rejection.
[[nodiscard]] int select_ms(int levels, int ns);

struct SampleInstant {
    std::int64_t index = 0;       ///< n
    double time = 0.0;            ///< n * tau_s [s]
    std::int64_t half_steps = 0;  ///< n * ms, in units of tau_sw / (2(N-1))
    int grid_index = 0;           ///< half_steps mod 2(N-1)
    int phase = 0;                ///< distinct-phase index in [0, Ndis)
    int carrier = 1;              ///< carrier that has an extremum at this instant
    Extremum kind = Extremum::Valley;
};

class SamplingSchedule {
public:
    SamplingSchedule(int levels, int ns, double switching_frequency);

    [[nodiscard]] int levels() const { return levels_; }
    [[nodiscard]] int ns() const { return ns_; }
    [[nodiscard]] int ms() const { return ms_; }
    [[nodiscard]] int ndis() const { return ndis_; }
    [[nodiscard]] double switching_frequency() const { return fsw_; }
    /// tau_s = ms / (2 (N-1) fsw)
    [[nodiscard]] double period() const;
    [[nodiscard]] double frequency() const;

    /// Extremum lookup for a position on the half-step grid.
    [[nodiscard]] SampleInstant instant(std::int64_t n) const;
    [[nodiscard]] int phase(std::int64_t n) const { return instant(n).phase; }

    /// Interrupt counter; advance() returns the instant about to be served.
    [[nodiscard]] std::int64_t counter() const { return counter_; }
    SampleInstant advance() { return instant(counter_++); }
    void reset() { counter_ = 0; }

private:
    int levels_;
    int ns_;
    int ms_;
    int ndis_;
    double fsw_;
    std::int64_t counter_ = 0;
};

/// Carrier/extremum located at half-step grid index g (0 <= g < 2(N-1)).
/// Even g is the valley of carrier g/2 + 1; odd g is a peak.
void grid_extremum(int levels, int g, int& carrier, Extremum& kind);

}  // namespace fcml
