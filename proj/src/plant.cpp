#include "fcml/plant.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fcml {

double ConverterParams::input_peak() const {
    if (dc_input_voltage > 0.0) {
        return dc_input_voltage;
    }
    return std::numbers::sqrt2 * grid_vrms;
}

void ConverterParams::validate() const {
    require(levels >= 3, "converter.levels must be >= 3");
    require(flying_capacitance.size() == flying_caps(),
            "converter.flying_capacitance must have N-2 = " + std::to_string(flying_caps()) +
                " entries");
    for (Eigen::Index k = 0; k < flying_capacitance.size(); ++k) {
        require(std::isfinite(flying_capacitance[k]) && flying_capacitance[k] > 0.0,
                "flying capacitances must be strictly positive");
    }
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(inductance), "converter.inductance must be > 0");
    require(positive(output_capacitance), "converter.output_capacitance must be > 0");
    require(positive(load_resistance), "converter.load_resistance must be > 0");
    require(positive(switching_frequency), "converter.switching_frequency must be > 0");
    require(std::isfinite(damping_resistance) && damping_resistance >= 0.0,
            "converter.damping_resistance must be >= 0");
    require(std::isfinite(dc_input_voltage) && dc_input_voltage >= 0.0,
            "converter.dc_input_voltage must be >= 0");
    if (dc_input_voltage == 0.0) {
        require(std::isfinite(grid_vrms) && grid_vrms >= 0.0, "converter.grid_vrms must be >= 0");
        require(positive(grid_frequency), "converter.grid_frequency must be > 0");
        require(std::isfinite(grid_phase), "converter.grid_phase must be finite");
    }
}

void ConverterParams::set_uniform_flying_capacitance(double cf) {
    flying_capacitance = Vector::Constant(flying_caps(), cf);
}

ConverterParams ConverterParams::reference_design() {
    ConverterParams p;
    p.levels = 6;
    p.inductance = 100e-6;
    p.output_capacitance = 20e-3;
    p.load_resistance = 5.0;
    p.switching_frequency = 120e3;
    // One decade below the 3 kHz current-loop crossover: Ra / L = 2*pi*300.
    p.damping_resistance = 2.0 * std::numbers::pi * 300.0 * p.inductance;
    p.grid_vrms = 277.0;
    p.grid_frequency = 60.0;
    p.set_uniform_flying_capacitance(2.2e-6);
    return p;
}

PlantState PlantState::zero(const ConverterParams& params) {
    PlantState s;
    s.vc = Vector::Zero(params.flying_caps());
    return s;
}

bool PlantState::finite() const {
    return vc.allFinite() && std::isfinite(il) && std::isfinite(vout) && std::isfinite(t);
}

SwitchVector::SwitchVector(std::initializer_list<int> values) {
    states.reserve(values.size());
    for (int v : values) {
        require(v == 0 || v == 1, "switch states must be 0 or 1");
        states.push_back(static_cast<std::uint8_t>(v));
    }
}

Vector SwitchVector::delta() const {
    Vector out;
    delta_into(out);
    return out;
}

void SwitchVector::delta_into(Vector& out) const {
    const auto n = static_cast<Eigen::Index>(states.size()) - 1;
    if (out.size() != n) {
        out.resize(std::max<Eigen::Index>(n, 0));
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        out[k] = static_cast<double>(states[k + 1]) - static_cast<double>(states[k]);
    }
}

namespace {

void check_dims(const PlantState& state, const SwitchVector& s, const ConverterParams& params) {
    if (static_cast<int>(s.size()) != params.switches() ||
        state.vc.size() != params.flying_caps()) {
        throw ValidationError("switch vector / state dimension does not match N = " +
                              std::to_string(params.levels));
    }
}

}  // namespace

void plant_derivatives_into(const PlantState& state, const SwitchVector& s, double vin,
                            const ConverterParams& params, PlantDerivative& out) {
    check_dims(state, s, params);
    const Eigen::Index caps = params.flying_caps();
    if (out.dvc.size() != caps) {
        out.dvc.resize(caps);
    }
    double ds_dot_vc = 0.0;
    for (Eigen::Index k = 0; k < caps; ++k) {
        const double ds = static_cast<double>(s.states[k + 1]) - static_cast<double>(s.states[k]);
        out.dvc[k] = state.il * ds / params.flying_capacitance[k];
        ds_dot_vc += ds * state.vc[k];
    }
    out.dil = (s.top() * vin - ds_dot_vc - state.vout) / params.inductance;
    out.dvout = (state.il - state.vout / params.load_resistance) / params.output_capacitance;
}

PlantDerivative plant_derivatives(const PlantState& state, const SwitchVector& s, double vin,
                                  const ConverterParams& params) {
    PlantDerivative out;
    plant_derivatives_into(state, s, vin, params, out);
    return out;
}

void freewheel_derivatives_into(const PlantState& state, const ConverterParams& params,
                                PlantDerivative& out) {
    const Eigen::Index caps = params.flying_caps();
    if (out.dvc.size() != caps) {
        out.dvc.resize(caps);
    }
    out.dvc.setZero();
    out.dil = state.il > 0.0 ? -state.vout / params.inductance : 0.0;
    out.dvout = (state.il - state.vout / params.load_resistance) / params.output_capacitance;
}

double pole_voltage(const SwitchVector& s, const Vector& vc, double vin) {
    if (s.size() < 2 || static_cast<Eigen::Index>(s.size()) - 1 != vc.size()) {
        throw ValidationError("pole_voltage: switch vector must have vc.size() + 1 entries");
    }
    double v = s.top() * vin;
    for (Eigen::Index k = 0; k < vc.size(); ++k) {
        const double ds = static_cast<double>(s.states[k + 1]) - static_cast<double>(s.states[k]);
        v -= ds * vc[k];
    }
    return v;
}

void switch_stress_into(const Vector& vc, double vin, Vector& out) {
    const Eigen::Index caps = vc.size();
    if (out.size() != caps + 1) {
        out.resize(caps + 1);
    }
    double below = 0.0;
    for (Eigen::Index k = 0; k < caps; ++k) {
        out[k] = vc[k] - below;
        below = vc[k];
    }
    out[caps] = vin - below;
}

Vector switch_stress(const Vector& vc, double vin) {
    Vector out;
    switch_stress_into(vc, vin, out);
    return out;
}

Vector balanced_voltages(int levels, double vin) {
    require(levels >= 3, "levels must be >= 3");
    Vector v(levels - 2);
    for (int k = 1; k <= levels - 2; ++k) {
        v[k - 1] = static_cast<double>(k) / static_cast<double>(levels - 1) * vin;
    }
    return v;
}

}  // namespace fcml
