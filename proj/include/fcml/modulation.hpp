#pragma once

// Phase-shifted PWM: N-1 unit triangular carriers, carrier k delayed by
// (k-1) * tau_sw / (N-1). Carrier 1 has a valley at t = 0.

#include "fcml/common.hpp"
#include "fcml/plant.hpp"

#include <cstdint>
#include <vector>

namespace fcml {

enum class Extremum { Valley, Peak };

struct DutyVector {
    Vector d;  ///< d_1..d_{N-1}, each in [0, 1]

    DutyVector() = default;
    explicit DutyVector(Vector values) : d(std::move(values)) {}
    DutyVector(std::initializer_list<double> values);

    [[nodiscard]] static DutyVector uniform(int switches, double value);

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(d.size()); }
    [[nodiscard]] double top() const { return d[d.size() - 1]; }
    /// dd_k = d_{k+1} - d_k, k = 1..N-2
    [[nodiscard]] Vector delta() const;
    [[nodiscard]] bool valid() const;
};

class CarrierBank {
public:
    CarrierBank(int levels, double switching_frequency);

    [[nodiscard]] int levels() const { return levels_; }
    [[nodiscard]] double period() const { return period_; }

    /// Carrier k (1-based) at time t; in [0, 1].
    [[nodiscard]] double value(int k, double t) const;

    /// S_k = 1 iff d_k > carrier_k(t) (strict; equality gives 0).
    [[nodiscard]] SwitchVector switch_states(const DutyVector& d, double t) const;

private:
    int levels_;
    double period_;
};

/// Integer-time carrier evaluation. One carrier period is 2(N-1) * ticks_per_half_step
/// ticks, so every carrier peak and valley falls exactly on a tick. Positions are
/// given in half-ticks so substep midpoints are representable too.
class CarrierGrid {
public:
    CarrierGrid(int levels, std::int64_t ticks_per_half_step);

    [[nodiscard]] int levels() const { return levels_; }
    [[nodiscard]] std::int64_t ticks_per_period() const { return period_half_ticks_ / 2; }

    [[nodiscard]] double value(int k, std::int64_t half_ticks) const;
    void switch_states(const DutyVector& d, std::int64_t half_ticks, SwitchVector& out) const;
    [[nodiscard]] SwitchVector switch_states(const DutyVector& d, std::int64_t half_ticks) const;

private:
    int levels_;
    std::int64_t ticks_per_half_step_;
    std::int64_t period_half_ticks_;
};

/// Duty values at which a switching edge lands on a disjoint-sampling instant.
[[nodiscard]] std::vector<double> dead_duty_set(int levels);

/// True iff any d_k lies within +-margin (inclusive) of a dead duty value.
[[nodiscard]] bool near_dead(const DutyVector& d, double margin);

inline constexpr double kDefaultDeadMargin = 0.03;

}  // namespace fcml
