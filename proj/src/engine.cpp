#include "fcml/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fcml {

GridSample grid_source(double t, const ConverterParams& params) {
    GridSample g;
    if (params.dc_input_voltage > 0.0) {
        g.vgrid = params.dc_input_voltage;
        g.vin = params.dc_input_voltage;
        g.theta = 0.5 * std::numbers::pi;
        return g;
    }
    const double phase = 2.0 * std::numbers::pi * params.grid_frequency * t + params.grid_phase;
    g.vgrid = std::numbers::sqrt2 * params.grid_vrms * std::sin(phase);
    g.vin = std::abs(g.vgrid);
    g.theta = std::fmod(phase, 2.0 * std::numbers::pi);
    if (g.theta < 0.0) {
        g.theta += 2.0 * std::numbers::pi;
    }
    return g;
}

Scenario Scenario::table3() {
    Scenario sc;
    sc.params = ConverterParams::reference_design();
    sc.cascade = synthesize_cascade(sc.params, ConverterMode::AcDcBuck, Bandwidths{}, 20.0, 0.05,
                                    PsiShape::Dc);
    sc.estimator.alpha = 0.047;
    sc.ns = 47;
    sc.duration = 0.2;
    sc.vout_ref = 60.0;
    sc.events = {{0.145, "set_ff_enabled", 0.0}};
    return sc;
}

std::vector<std::string> Scenario::validate() const {
    params.validate();
    require(std::isfinite(duration) && duration > 0.0, "scenario.duration must be > 0");
    require(step_divisor >= 1, "scenario.step_divisor must be >= 1");
    require(substep_log_every >= 0, "scenario.substep_log_every must be >= 0");
    require(std::isfinite(vout_ref) && std::isfinite(vout_initial), "vout values must be finite");
    require(std::is_sorted(events.begin(), events.end(),
                           [](const Event& a, const Event& b) { return a.time < b.time; }),
            "scenario.events must be sorted by time");
    for (const auto& ev : events) {
        RuntimeSettings probe;
        apply_event(probe, ev);
        require(std::isfinite(ev.time) && ev.time >= 0.0, "event times must be >= 0");
    }
    require(cascade.mode != ConverterMode::AcDcBoost,
            "cascade.mode acdc_boost is not supported by the buck plant model");
    if (cascade.mode == ConverterMode::DcDc) {
        require(params.dc_input_voltage > 0.0, "dcdc mode requires converter.dc_input_voltage > 0");
    }
    require(cascade.il_max > 0.0, "cascade.il_max must be > 0");
    require(cascade.dduty_max > 0.0 && cascade.dduty_max <= 1.0, "cascade.dduty_max must be in (0, 1]");
    require(cascade.balance_margin >= 1.0, "cascade.balance_margin must be >= 1");
    cascade.voltage.validate();
    cascade.balancing.validate();
    cascade.current.validate();
    const SamplingSchedule schedule(params.levels, ns, params.switching_frequency);
    require(estimator.alpha >= 0.0, "estimator.alpha must be >= 0");
    if (!estimator.allow_unstable_alpha) {
        const double lim = alpha_stability_limit(params.levels);
        require(estimator.alpha < lim, "estimator.alpha must be < 2/(N-2) = " +
                                           std::to_string(lim) +
                                           " (set estimator.allow_unstable_alpha to override)");
    }
    require(estimator.noise_vsw >= 0.0 && estimator.noise_il >= 0.0, "noise levels must be >= 0");
    return check_time_scale_separation(cascade.bandwidths, schedule.frequency());
}

void apply_event(RuntimeSettings& rt, const Event& ev) {
    if (ev.action == "set_ff_enabled") {
        rt.ff_enabled = ev.value != 0.0;
    } else if (ev.action == "set_fb_enabled") {
        rt.fb_enabled = ev.value != 0.0;
    } else if (ev.action == "step_vout_ref") {
        rt.vout_ref = ev.value;
    } else if (ev.action == "step_rload") {
        require(ev.value > 0.0, "step_rload value must be > 0");
        rt.load_resistance = ev.value;
    } else if (ev.action == "set_alpha") {
        require(ev.value >= 0.0, "set_alpha value must be >= 0");
        rt.alpha = ev.value;
    } else {
        throw ValidationError("unknown event action '" + ev.action + "'");
    }
}

Segment WaveformLog::overall() const {
    Segment s;
    if (segments.empty()) {
        return s;
    }
    s.t_start = segments.front().t_start;
    s.t_end = segments.back().t_end;
    for (const auto& seg : segments) {
        s.max_stress = std::max(s.max_stress, seg.max_stress);
        s.max_est_error = std::max(s.max_est_error, seg.max_est_error);
        s.max_il = std::max(s.max_il, seg.max_il);
        s.max_il_sampled = std::max(s.max_il_sampled, seg.max_il_sampled);
        s.max_il_ref = std::max(s.max_il_ref, seg.max_il_ref);
    }
    return s;
}

std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& y,
                                    double ref, double tol, double t_end) {
    const double band = std::abs(ref) * tol;
    std::optional<double> candidate;
    for (std::size_t i = 0; i < t.size() && t[i] <= t_end; ++i) {
        if (std::abs(y[i] - ref) <= band) {
            if (!candidate) {
                candidate = t[i];
            }
        } else {
            candidate.reset();
        }
    }
    return candidate;
}

namespace {

constexpr double kDivergenceLimit = 1e9;

struct Rk4Work {
    PlantState s1, s2, s3;
    PlantDerivative k1, k2, k3, k4;
};

void add_scaled(const PlantState& base, const PlantDerivative& k, double h, PlantState& out) {
    out.vc = base.vc + h * k.dvc;
    out.il = base.il + h * k.dil;
    out.vout = base.vout + h * k.dvout;
}

void check_finite(const PlantState& s) {
    const bool ok = s.finite() && std::abs(s.il) < kDivergenceLimit &&
                    std::abs(s.vout) < kDivergenceLimit &&
                    (s.vc.size() == 0 || s.vc.cwiseAbs().maxCoeff() < kDivergenceLimit);
    if (!ok) {
        throw DivergenceError("state diverged at t = " + std::to_string(s.t) +
                              " s (iL = " + std::to_string(s.il) +
                              ", vout = " + std::to_string(s.vout) + ")");
    }
}

}  // namespace

WaveformLog run_scenario(const Scenario& sc, const SubstepObserver& observer) {
    WaveformLog log;
    log.warnings = sc.validate();

    ConverterParams params = sc.params;
    const int levels = params.levels;
    const Eigen::Index caps = levels - 2;
    SamplingSchedule schedule(levels, sc.ns, params.switching_frequency);
    const double taus = schedule.period();
    const std::int64_t half_steps = 2 * static_cast<std::int64_t>(levels - 1);
    const std::int64_t sub = (sc.step_divisor + half_steps - 1) / half_steps;
    const CarrierGrid grid(levels, sub);
    const std::int64_t ticks_per_sample = schedule.ms() * sub;
    const double dt = params.carrier_period() / static_cast<double>(half_steps * sub);
    const auto total_ticks = static_cast<std::int64_t>(std::ceil(sc.duration / dt - 1e-9));
    log.levels = levels;
    log.taus = taus;
    log.dt = dt;

    RuntimeSettings rt{sc.vout_ref, params.load_resistance, sc.estimator.alpha,
                       sc.estimator.ff_enabled, sc.estimator.fb_enabled};
    std::size_t next_event = 0;

    const GridSample g0 = grid_source(0.0, params);
    PlantState x = PlantState::zero(params);
    x.vc = balanced_voltages(levels, g0.vin);
    x.vout = sc.vout_initial;
    EstimatorState est = EstimatorState::initial(levels, rt.alpha, g0.vin);

    PirState pir_v, pir_i;
    DutyVector d_active(Vector::Zero(levels - 1));
    DutyVector d_pending = d_active;
    bool gates_active = false;
    bool gates_pending = false;
    double il_ref = 0.0;
    double vin_prev = g0.vin;

    std::mt19937_64 rng(sc.estimator.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    Segment seg;
    auto close_segment = [&](double t) {
        seg.t_end = t;
        log.segments.push_back(seg);
        seg = Segment{};
        seg.t_start = t;
    };

    const std::size_t expected = static_cast<std::size_t>(total_ticks / ticks_per_sample + 1);
    for (auto* v : {&log.t, &log.il, &log.il_ref, &log.vout, &log.vin, &log.est_error}) {
        v->reserve(expected);
    }

    Rk4Work w;
    SwitchVector s_hold(static_cast<std::size_t>(levels - 1));
    SwitchVector s_meas(static_cast<std::size_t>(levels - 1));
    Vector stress(levels - 1);
    Vector ds(caps);

    auto deriv = [&](const PlantState& st, double vin, PlantDerivative& out) {
        if (gates_active) {
            plant_derivatives_into(st, s_hold, vin, params, out);
        } else {
            freewheel_derivatives_into(st, params, out);
        }
    };

    for (std::int64_t tick = 0; tick <= total_ticks; ++tick) {
        const double t = static_cast<double>(tick) * dt;
        x.t = t;

        bool event_fired = false;
        while (next_event < sc.events.size() && sc.events[next_event].time <= t + 1e-15) {
            apply_event(rt, sc.events[next_event]);
            ++next_event;
            event_fired = true;
        }
        if (event_fired) {
            params.load_resistance = rt.load_resistance;
            if (t > seg.t_start) {
                close_segment(t);
            }
        }

        if (tick % ticks_per_sample == 0) {
            const GridSample g = grid_source(t, params);

            // Measurement with the duty that was in force up to this instant.
            if (gates_active) {
                grid.switch_states(d_active, 2 * tick, s_meas);
            } else {
                std::fill(s_meas.states.begin(), s_meas.states.end(), 0);
            }
            s_meas.delta_into(ds);
            double vsw = pole_voltage(s_meas, x.vc, g.vin);
            double il_meas = x.il;
            if (sc.estimator.noise_vsw > 0.0) {
                vsw += sc.estimator.noise_vsw * unit(rng);
            }
            if (sc.estimator.noise_il > 0.0) {
                il_meas += sc.estimator.noise_il * unit(rng);
            }

            est.alpha = rt.alpha;
            est.fb_enabled = rt.fb_enabled;
            est.ff_enabled = rt.ff_enabled;
            EstimatorSample smp;
            smp.ds = ds;
            smp.vsw = vsw;
            smp.s_top = s_meas.top();
            smp.vin = g.vin;
            smp.il = il_meas;
            smp.feedback_valid =
                gates_active &&
                (!sc.estimator.dead_duty_gating || gate_feedback(d_active, sc.cascade.dead_margin));
            smp.next_dduty = gates_pending ? d_pending.delta() : Vector::Zero(caps);
            if (!smp.feedback_valid) {
                ++log.gated_samples;
            }
            hybrid_update_in_place(est, smp, taus, params.flying_capacitance);

            const VoltageControlOutput vc_out = voltage_controller_step(
                sc.cascade.mode, sc.cascade, pir_v, rt.vout_ref, x.vout, g.theta, g.vgrid, taus);
            il_ref = vc_out.il_ref;

            BalancingInputs bal_in;
            bal_in.il = il_meas;
            bal_in.dvin_dt = (g.vin - vin_prev) / taus;
            bal_in.cf = params.flying_capacitance;
            vin_prev = g.vin;
            const Vector dd =
                balancing_controller_step(est.vhat, g.vin, g.vgrid, x.vout, sc.cascade, bal_in);

            // The duty computed now is applied one sample late; predict the current at
            // that instant from the duty already queued so the loop acts on it.
            double il_ctrl = il_meas;
            if (sc.cascade.current_delay_compensation && gates_pending) {
                const double vpole = d_pending.top() * g.vin - d_pending.delta().dot(est.vhat);
                il_ctrl = std::max(0.0, il_meas + taus / params.inductance * (vpole - x.vout));
            }
            const CurrentControlOutput cc = current_controller_step(
                sc.cascade, pir_i, il_ref, il_ctrl, est.vhat, dd, x.vout, g.vin, g.vgrid, taus);
            log.duty_saturations += cc.saturation_events;

            d_active = d_pending;
            gates_active = gates_pending;
            d_pending = cc.duty;
            gates_pending = cc.enabled;

            switch_stress_into(x.vc, g.vin, stress);
            const double err = caps > 0 ? (est.vhat - x.vc).cwiseAbs().maxCoeff() : 0.0;
            log.t.push_back(t);
            log.il.push_back(x.il);
            log.il_ref.push_back(il_ref);
            log.vout.push_back(x.vout);
            log.vin.push_back(g.vin);
            log.vc.push_back(x.vc);
            log.vhat.push_back(est.vhat);
            log.duty.push_back(d_active.d);
            log.stress.push_back(stress);
            log.est_error.push_back(err);
            log.feedback_active.push_back(smp.feedback_valid && rt.fb_enabled ? 1 : 0);
            log.gates_on.push_back(gates_active ? 1 : 0);
            seg.max_est_error = std::max(seg.max_est_error, err);
            seg.max_il_sampled = std::max(seg.max_il_sampled, x.il);
            seg.max_il_ref = std::max(seg.max_il_ref, il_ref);
        }

        if (tick == total_ticks) {
            break;
        }

        // One RK4 step with switch states frozen at the substep midpoint.
        if (gates_active) {
            grid.switch_states(d_active, 2 * tick + 1, s_hold);
        } else {
            std::fill(s_hold.states.begin(), s_hold.states.end(), 0);
        }
        const double vin0 = grid_source(t, params).vin;
        const double vin_mid = grid_source(t + 0.5 * dt, params).vin;
        const double vin1 = grid_source(t + dt, params).vin;
        deriv(x, vin0, w.k1);
        add_scaled(x, w.k1, 0.5 * dt, w.s1);
        deriv(w.s1, vin_mid, w.k2);
        add_scaled(x, w.k2, 0.5 * dt, w.s2);
        deriv(w.s2, vin_mid, w.k3);
        add_scaled(x, w.k3, dt, w.s3);
        deriv(w.s3, vin1, w.k4);
        const double h6 = dt / 6.0;
        x.vc += h6 * (w.k1.dvc + 2.0 * w.k2.dvc + 2.0 * w.k3.dvc + w.k4.dvc);
        x.il += h6 * (w.k1.dil + 2.0 * w.k2.dil + 2.0 * w.k3.dil + w.k4.dil);
        x.vout += h6 * (w.k1.dvout + 2.0 * w.k2.dvout + 2.0 * w.k3.dvout + w.k4.dvout);
        if (!gates_active && x.il < 0.0) {
            x.il = 0.0;
        }
        x.t = t + dt;
        check_finite(x);

        switch_stress_into(x.vc, vin1, stress);
        seg.max_stress = std::max(seg.max_stress, stress.cwiseAbs().maxCoeff());
        seg.max_il = std::max(seg.max_il, x.il);
        if (observer) {
            observer(x, s_hold, gates_active, dt);
        }
        if (sc.substep_log_every > 0 && (tick + 1) % sc.substep_log_every == 0) {
            log.sub_t.push_back(x.t);
            log.sub_il.push_back(x.il);
            log.sub_vout.push_back(x.vout);
            log.sub_vc.push_back(x.vc);
        }
    }
    close_segment(static_cast<double>(total_ticks) * dt);

    const double first_end = sc.events.empty() ? sc.duration : sc.events.front().time;
    log.settling_time = settling_time(log.t, log.vout, sc.vout_ref, 0.02, first_end);
    return log;
}

}  // namespace fcml
