#include "fcml/modulation.hpp"

#include <cmath>
#include <string>

namespace fcml {

DutyVector::DutyVector(std::initializer_list<double> values) : d(values.size()) {
    Eigen::Index i = 0;
    for (double v : values) {
        d[i++] = v;
    }
}

DutyVector DutyVector::uniform(int switches, double value) {
    return DutyVector(Vector::Constant(switches, value));
}

Vector DutyVector::delta() const {
    const Eigen::Index n = d.size() - 1;
    Vector out(std::max<Eigen::Index>(n, 0));
    for (Eigen::Index k = 0; k < n; ++k) {
        out[k] = d[k + 1] - d[k];
    }
    return out;
}

bool DutyVector::valid() const {
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (!(d[k] >= 0.0 && d[k] <= 1.0)) {
            return false;
        }
    }
    return true;
}

CarrierBank::CarrierBank(int levels, double switching_frequency)
    : levels_(levels), period_(1.0 / switching_frequency) {
    require(levels >= 3, "levels must be >= 3");
    require(switching_frequency > 0.0, "switching frequency must be > 0");
}

namespace {

// Strict comparison, except that a saturated duty holds its switch through the
// carrier peak as well.
int compare(double duty, double carrier) {
    return duty >= 1.0 || duty > carrier ? 1 : 0;
}

}  // namespace

double CarrierBank::value(int k, double t) const {
    if (k < 1 || k > levels_ - 1) {
        throw ValidationError("carrier index " + std::to_string(k) + " out of range 1.." +
                              std::to_string(levels_ - 1));
    }
    const double shift = static_cast<double>(k - 1) / static_cast<double>(levels_ - 1);
    double phase = t / period_ - shift;
    phase -= std::floor(phase);
    return phase <= 0.5 ? 2.0 * phase : 2.0 - 2.0 * phase;
}

SwitchVector CarrierBank::switch_states(const DutyVector& d, double t) const {
    require(static_cast<int>(d.size()) == levels_ - 1, "duty vector must have N-1 entries");
    SwitchVector s(d.size());
    for (int k = 1; k <= levels_ - 1; ++k) {
        s.states[k - 1] = compare(d.d[k - 1], value(k, t));
    }
    return s;
}

CarrierGrid::CarrierGrid(int levels, std::int64_t ticks_per_half_step)
    : levels_(levels),
      ticks_per_half_step_(ticks_per_half_step),
      period_half_ticks_(4 * static_cast<std::int64_t>(levels - 1) * ticks_per_half_step) {
    require(levels >= 3, "levels must be >= 3");
    require(ticks_per_half_step >= 1, "ticks_per_half_step must be >= 1");
}

double CarrierGrid::value(int k, std::int64_t half_ticks) const {
    const std::int64_t offset = 4 * static_cast<std::int64_t>(k - 1) * ticks_per_half_step_;
    std::int64_t u = (half_ticks - offset) % period_half_ticks_;
    if (u < 0) {
        u += period_half_ticks_;
    }
    const std::int64_t half = period_half_ticks_ / 2;
    const std::int64_t rise = u <= half ? u : period_half_ticks_ - u;
    return static_cast<double>(rise) / static_cast<double>(half);
}

void CarrierGrid::switch_states(const DutyVector& d, std::int64_t half_ticks,
                                SwitchVector& out) const {
    const auto n = static_cast<std::size_t>(levels_ - 1);
    if (out.states.size() != n) {
        out.states.assign(n, 0);
    }
    for (std::size_t k = 0; k < n; ++k) {
        out.states[k] = compare(d.d[static_cast<Eigen::Index>(k)], value(static_cast<int>(k) + 1, half_ticks));
    }
}

SwitchVector CarrierGrid::switch_states(const DutyVector& d, std::int64_t half_ticks) const {
    require(static_cast<int>(d.size()) == levels_ - 1, "duty vector must have N-1 entries");
    SwitchVector s;
    switch_states(d, half_ticks, s);
    return s;
}

std::vector<double> dead_duty_set(int levels) {
    require(levels >= 3, "levels must be >= 3");
    std::vector<double> out;
    const double denom = static_cast<double>(levels - 1);
    if (levels % 2 == 0) {
        for (int k = 1; k <= levels - 2; ++k) {
            out.push_back(k / denom);
        }
    } else {
        for (int k = 1; k <= (levels - 3) / 2; ++k) {
            out.push_back(2.0 * k / denom);
        }
    }
    return out;
}

bool near_dead(const DutyVector& d, double margin) {
    require(margin >= 0.0, "margin must be >= 0");
    const int levels = static_cast<int>(d.size()) + 1;
    const auto dead = dead_duty_set(levels);
    // Slack absorbs representation error so that e.g. |0.43 - 0.4| counts as 0.03.
    constexpr double kSlack = 1e-12;
    for (Eigen::Index k = 0; k < d.d.size(); ++k) {
        for (double x : dead) {
            if (std::abs(d.d[k] - x) <= margin + kSlack) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace fcml
