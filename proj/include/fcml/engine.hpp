#pragma once

// Fixed-step simulation of the switched converter with the sampled control stack.
//
// Time is kept on an integer tick grid: one half carrier step (tau_sw / (2(N-1)))
// holds `substeps_per_half_step` ticks, so every sampling instant and every carrier
// extremum is exactly a tick. Switch states are evaluated at each substep midpoint
// and held for one RK4 step.

#include "fcml/control.hpp"
#include "fcml/estimator.hpp"
#include "fcml/plant.hpp"
#include "fcml/sampling.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fcml {

struct GridSample {
    double vgrid = 0.0;
    double vin = 0.0;
    double theta = 0.0;  ///< grid phase in [0, 2 pi)
};

/// Ideal rectified grid, or a constant source when params.dc_input_voltage > 0.
[[nodiscard]] GridSample grid_source(double t, const ConverterParams& params);

struct EstimatorSettings {
    double alpha = 0.047;
    bool fb_enabled = true;
    bool ff_enabled = true;
    bool dead_duty_gating = true;
    double noise_vsw = 0.0;  ///< std dev of additive pole-voltage noise [V]
    double noise_il = 0.0;   ///< std dev of additive current noise [A]
    std::uint64_t seed = 1;
    bool allow_unstable_alpha = false;
};

struct Event {
    double time = 0.0;
    std::string action;  ///< set_ff_enabled | set_fb_enabled | step_vout_ref | step_rload | set_alpha
    double value = 0.0;
};

struct Scenario {
    ConverterParams params = ConverterParams::reference_design();
    CascadeConfig cascade;
    EstimatorSettings estimator;
    int ns = 47;
    double duration = 0.2;
    double vout_ref = 60.0;
    double vout_initial = 0.0;
    int step_divisor = 512;   ///< target ticks per carrier period
    int substep_log_every = 0;  ///< 0 disables the substep trace
    std::vector<Event> events;

    /// Six-level AC-DC buck reference scenario with the 0.145 s feedforward-disable event.
    [[nodiscard]] static Scenario table3();

    /// Throws ValidationError. Returns advisory warnings (time-scale separation).
    std::vector<std::string> validate() const;
};

/// Quantities an event may change during a run.
struct RuntimeSettings {
    double vout_ref = 0.0;
    double load_resistance = 0.0;
    double alpha = 0.0;
    bool ff_enabled = true;
    bool fb_enabled = true;
};

/// Throws ValidationError for an unknown action.
void apply_event(RuntimeSettings& rt, const Event& ev);

struct Segment {
    double t_start = 0.0;
    double t_end = 0.0;
    double max_stress = 0.0;     ///< max |stress_k| over substeps [V]
    double max_est_error = 0.0;  ///< max ||vhat - vc||_inf over samples [V]
    double max_il = 0.0;         ///< max iL over substeps [A]
    double max_il_sampled = 0.0; ///< max iL at sampling instants [A]
    double max_il_ref = 0.0;
};

struct WaveformLog {
    int levels = 0;
    double taus = 0.0;
    double dt = 0.0;
    // Channels recorded at each sampling instant.
    std::vector<double> t, il, il_ref, vout, vin;
    std::vector<Vector> vc, vhat, duty, stress;
    std::vector<double> est_error;
    std::vector<std::uint8_t> feedback_active, gates_on;
    // Optional substep trace.
    std::vector<double> sub_t, sub_il, sub_vout;
    std::vector<Vector> sub_vc;

    std::vector<Segment> segments;  ///< split at event times
    std::vector<std::string> warnings;
    std::int64_t duty_saturations = 0;
    std::int64_t gated_samples = 0;
    std::optional<double> settling_time;  ///< +-2% band, first segment

    [[nodiscard]] std::size_t samples() const { return t.size(); }
    [[nodiscard]] Segment overall() const;
};

/// Called after every integration substep with the state at its end and the
/// switch vector that was held during it.
using SubstepObserver = std::function<void(const PlantState&, const SwitchVector&, bool gates_on,
                                           double dt)>;

[[nodiscard]] WaveformLog run_scenario(const Scenario& sc, const SubstepObserver& observer = {});

/// First time after which vout stays within tol * ref of ref up to t_end.
[[nodiscard]] std::optional<double> settling_time(const std::vector<double>& t,
                                                  const std::vector<double>& y, double ref,
                                                  double tol, double t_end);

}  // namespace fcml
