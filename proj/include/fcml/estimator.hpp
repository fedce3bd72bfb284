#pragma once

// =============================================================================
// Hybrid flying-capacitor voltage estimator
// =============================================================================
// Feedback: one projected gradient step per sample on the rank-one cost
//   J_n(v) = 0.5 * (S_top vin - v_sw + dS' v)^2,
// i.e. vhat <- (I - alpha dS dS') vhat + alpha (S_top vin - v_sw) dS.
// Feedforward: open-loop charge integration over the last sampling period,
//   dvhat_k = tau_s iL dd*_k / Cf_k.
// The two are summed every sample. Feedback is suspended near dead duties,
// where the sampled pole voltage may straddle a switching edge.
// =============================================================================

#include "fcml/common.hpp"
#include "fcml/modulation.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace fcml {

struct EstimatorState {
    Vector vhat;        ///< estimated flying-capacitor voltages [V]
    double alpha = 0.0; ///< feedback learning rate
    Vector prev_dduty;  ///< dd* applied over the sampling period that just ended
    bool fb_enabled = true;
    bool ff_enabled = true;

    /// Balanced start (k/(N-1)) * vin0, zero duty-difference history.
    [[nodiscard]] static EstimatorState initial(int levels, double alpha, double vin0);
};

struct EstimatorSample {
    Vector ds;                  ///< dS at the sampling instant
    double vsw = 0.0;           ///< measured pole voltage [V]
    int s_top = 0;              ///< S_{N-1}
    double vin = 0.0;           ///< measured input voltage [V]
    double il = 0.0;            ///< measured inductor current [A]
    bool feedback_valid = true; ///< false while gate_feedback disables feedback
    Vector next_dduty;          ///< dd* that will be applied over the next period
};

[[nodiscard]] Vector feedback_update(const Vector& vhat, const Vector& ds, double vsw, int s_top,
                                     double vin, double alpha);

[[nodiscard]] Vector feedforward_update(double il, const Vector& prev_dduty, const Vector& cf,
                                        double taus);

/// One hybrid step; returns the new state with the dd* buffer shifted.
[[nodiscard]] EstimatorState hybrid_update(const EstimatorState& est, const EstimatorSample& sample,
                                           double taus, const Vector& cf);

/// In-place variant used by the simulation loop.
void hybrid_update_in_place(EstimatorState& est, const EstimatorSample& sample, double taus,
                            const Vector& cf);

/// True when feedback may run, false when some d_k is within margin of a dead duty.
[[nodiscard]] bool gate_feedback(const DutyVector& d, double margin = kDefaultDeadMargin);

/// 2 / (N-2): below this every single-sample update is a contraction.
[[nodiscard]] double alpha_stability_limit(int levels);

/// Largest alpha keeping the per-sample error from input-voltage slew below ve_hf.
[[nodiscard]] double alpha_upper_bound_hf(double ve_hf, double taus, int levels,
                                          double dvin_dt_max);

struct GainBounds {
    double alpha_max_stability = 0.0;
    double alpha_max_hf = 0.0;
    std::optional<double> alpha_min_dc;  ///< empty if no sampled alpha meets the DC budget
    std::vector<std::pair<double, double>> beta_max_curve;  ///< (alpha, beta_max)
};

}  // namespace fcml
