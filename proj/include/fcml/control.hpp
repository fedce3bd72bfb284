#pragma once

// =============================================================================
// Generalized PIR controller and the cascaded FCML control hierarchy
// =============================================================================
//   y*   = kp x~ + g_i I + g_r sum(R_h) + y_ff - k_ad y_ad_in
//   ysat = clamp(y*, out_min, out_max)
// The I and R paths integrate the back-calculated error
//   x~_aw = x~ + g_aw k_aw (ysat - y*).
// g_en = false forces the output to zero and freezes every internal state.
// With reset_on_enable the states are zeroed on the next g_en rising edge.
// =============================================================================

#include "fcml/common.hpp"
#include "fcml/modulation.hpp"
#include "fcml/plant.hpp"

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fcml {

struct PirGammas {
    bool aw = false;
    bool r = false;
    bool i = false;
    bool en = true;
};

struct Resonance {
    double omega = 0.0;  ///< [rad/s]
    double gain = 0.0;   ///< kr for kr * s / (s^2 + omega^2)
};

struct PirConfig {
    double kp = 0.0;
    double ki = 0.0;
    std::vector<Resonance> resonances;
    PirGammas gammas;
    double out_min = -std::numeric_limits<double>::infinity();
    double out_max = std::numeric_limits<double>::infinity();
    double aw_gain = 0.0;  ///< back-calculation gain; 1/kp by convention
    double ad_gain = 0.0;  ///< active-damping gain applied to y_ad input
    bool reset_on_enable = true;

    void validate() const;
};

struct PirState {
    double integ = 0.0;
    /// (cos, sin) accumulator pair per resonance; sized lazily by pir_step.
    std::vector<std::array<double, 2>> res;
    bool enabled = true;  ///< g_en seen by the previous step

    [[nodiscard]] bool finite() const;
};

struct PirOutput {
    double y = 0.0;     ///< y* before saturation
    double ysat = 0.0;  ///< clamped output
    bool saturated = false;
};

/// One controller update at period taus. Mutates st unless gammas.en is false.
PirOutput pir_step(const PirConfig& cfg, PirState& st, double xref, double x, double yff,
                   double yad_input, double taus);

// -----------------------------------------------------------------------------
// Cascade
// -----------------------------------------------------------------------------

enum class ConverterMode { DcDc, AcDcBoost, AcDcBuck };

/// Buck-mode current-reference shaping.
enum class PsiShape { Dc, AbsSin };

struct Bandwidths {
    double current = 3000.0;    ///< [Hz]
    double voltage = 45.0;      ///< [Hz]
    double balancing = 246.0;   ///< [Hz]
    std::optional<double> estimator;  ///< [Hz], checked against balancing when given
};

struct CascadeConfig {
    ConverterMode mode = ConverterMode::AcDcBuck;
    double il_max = 20.0;          ///< [A]
    double dduty_max = 0.05;       ///< per-component |dd*| limit
    double balance_margin = 1.2;   ///< m: balancing enabled while |vgrid| > m vout
    double dead_margin = kDefaultDeadMargin;
    double balance_ff_min_current = 1.0;  ///< [A] below this the slope feedforward is off
    bool balance_slope_ff = true;
    bool current_pure_p = false;
    bool current_delay_compensation = true;  ///< one-step current prediction
    PsiShape psi = PsiShape::Dc;
    double phi_gain = 0.0;         ///< [A], phi = phi_gain * sin(2 theta); zero by default
    Bandwidths bandwidths;
    PirConfig voltage;
    PirConfig balancing;
    PirConfig current;
};

/// Pole-placement gains for each loop from its averaged plant.
///   current:   L diL/dt = v             -> kp = 2 pi f_cc L
///   voltage:   Cout dvout/dt = psi iL   -> kp = 2 pi f_vc Cout / mean(psi)
///   balancing: Cf dvc/dt = iL dd        -> kp = 2 pi f_vb Cf / iL_nom
/// Integral corners sit a decade below each crossover.
[[nodiscard]] CascadeConfig synthesize_cascade(const ConverterParams& params, ConverterMode mode,
                                               const Bandwidths& bw, double il_max = 20.0,
                                               double dduty_max = 0.05,
                                               PsiShape psi = PsiShape::Dc);

[[nodiscard]] double psi_value(PsiShape shape, double theta_g);

struct VoltageControlOutput {
    double il_ref = 0.0;
    double y = 0.0;  ///< saturated PIR output before shaping
    bool enabled = false;
};

VoltageControlOutput voltage_controller_step(ConverterMode mode, const CascadeConfig& cfg,
                                             PirState& st, double vout_ref, double vout,
                                             double theta_g, double vgrid, double taus);

struct BalancingInputs {
    double il = 0.0;        ///< sampled inductor current [A]
    double dvin_dt = 0.0;   ///< input-voltage slope estimate [V/s]
    Vector cf;              ///< flying capacitances [F]; empty disables the slope feedforward
};

/// Returns dd*; zero vector while |vgrid| <= m vout.
[[nodiscard]] Vector balancing_controller_step(const Vector& vhat, double vin, double vgrid,
                                               double vout, const CascadeConfig& cfg,
                                               const BalancingInputs& in = {});

struct CurrentControlOutput {
    DutyVector duty;
    bool enabled = false;
    int saturation_events = 0;  ///< number of d_k clamped to [0, 1] in this step
};

/// Top duty from the PIR in volts, lower duties by cumulative subtraction of dd*.
CurrentControlOutput current_controller_step(const CascadeConfig& cfg, PirState& st,
                                             double il_ref, double il, const Vector& vhat,
                                             const Vector& dduty, double vout, double vin,
                                             double vgrid, double taus);

/// Advisory checks tau_s << tau_cc << tau_vc and tau_ve << tau_vb.
[[nodiscard]] std::vector<std::string> check_time_scale_separation(const Bandwidths& bw,
                                                                   double fs, double ratio = 5.0);

}  // namespace fcml
