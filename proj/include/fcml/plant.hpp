#pragma once

// =============================================================================
// Switched model of an N-level flying-capacitor multilevel buck stage
// =============================================================================
// Ideal switches, stiff input source, lossless L/C elements. The k-th upper
// switch S_k (k = 1..N-1) is complemented by its lower switch; flying
// capacitor k sits between switch pairs k and k+1.
// =============================================================================

#include "fcml/common.hpp"

#include <cstdint>
#include <vector>

namespace fcml {

struct ConverterParams {
    int levels = 6;                        ///< N, number of voltage levels (>= 3)
    double inductance = 100e-6;            ///< L [H]
    Vector flying_capacitance;             ///< Cf, N-2 entries [F]
    double output_capacitance = 20e-3;     ///< Cout [F]
    double load_resistance = 5.0;          ///< Rload [Ohm]
    double switching_frequency = 120e3;    ///< per-switch PWM frequency [Hz]
    double damping_resistance = 0.0;       ///< Ra, active-damping gain [Ohm]
    double grid_vrms = 277.0;              ///< grid RMS voltage [V]
    double grid_frequency = 60.0;          ///< grid frequency [Hz]
    double grid_phase = 0.0;               ///< grid phase at t = 0 [rad]
    double dc_input_voltage = 0.0;         ///< > 0 replaces the rectified grid with a DC source

    [[nodiscard]] int flying_caps() const { return levels - 2; }
    [[nodiscard]] int switches() const { return levels - 1; }
    [[nodiscard]] double carrier_period() const { return 1.0 / switching_frequency; }
    [[nodiscard]] double input_peak() const;

    /// Throws ValidationError unless every field is physically meaningful.
    void validate() const;

    /// Broadcasts one capacitance to all N-2 flying capacitors.
    void set_uniform_flying_capacitance(double cf);

    /// 6-level AC-DC buck reference design (120 kHz, 100 uH, 2.2 uF, 20 mF, 5 Ohm).
    [[nodiscard]] static ConverterParams reference_design();
};

struct PlantState {
    Vector vc;          ///< flying-capacitor voltages [V]
    double il = 0.0;    ///< inductor current [A]
    double vout = 0.0;  ///< output voltage [V]
    double t = 0.0;     ///< time [s]

    [[nodiscard]] static PlantState zero(const ConverterParams& params);
    [[nodiscard]] bool finite() const;
};

/// Upper-switch states S_1..S_{N-1}; lower switches are the complements.
struct SwitchVector {
    std::vector<std::uint8_t> states;

    SwitchVector() = default;
    explicit SwitchVector(std::size_t switches, std::uint8_t value = 0) : states(switches, value) {}
    SwitchVector(std::initializer_list<int> values);

    [[nodiscard]] std::size_t size() const { return states.size(); }
    [[nodiscard]] int top() const { return states.empty() ? 0 : states.back(); }
    /// dS_k = S_{k+1} - S_k, k = 1..N-2
    [[nodiscard]] Vector delta() const;
    void delta_into(Vector& out) const;

    bool operator==(const SwitchVector&) const = default;
};

struct PlantDerivative {
    Vector dvc;
    double dil = 0.0;
    double dvout = 0.0;
};

/// Right-hand side of the switched plant for a fixed switch vector.
[[nodiscard]] PlantDerivative plant_derivatives(const PlantState& state, const SwitchVector& s,
                                                double vin, const ConverterParams& params);

/// Allocation-free variant used by the integrator.
void plant_derivatives_into(const PlantState& state, const SwitchVector& s, double vin,
                            const ConverterParams& params, PlantDerivative& out);

/// All gates off: inductor current freewheels through the lower diodes and
/// cannot reverse; flying capacitors carry no current.
void freewheel_derivatives_into(const PlantState& state, const ConverterParams& params,
                                PlantDerivative& out);

/// v_sw = -dS' vc + S_{N-1} vin
[[nodiscard]] double pole_voltage(const SwitchVector& s, const Vector& vc, double vin);

/// stress_k = vc_k - vc_{k-1}, with vc_0 = 0 and vc_{N-1} = vin.
[[nodiscard]] Vector switch_stress(const Vector& vc, double vin);
void switch_stress_into(const Vector& vc, double vin, Vector& out);

/// Nominal profile (k / (N-1)) vin, k = 1..N-2.
[[nodiscard]] Vector balanced_voltages(int levels, double vin);

}  // namespace fcml
