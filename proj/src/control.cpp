#include "fcml/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fcml {

void PirConfig::validate() const {
    require(kp >= 0.0 && ki >= 0.0 && aw_gain >= 0.0 && ad_gain >= 0.0,
            "PIR gains must be >= 0");
    require(out_min <= out_max, "PIR out_min must be <= out_max");
    for (const auto& r : resonances) {
        require(r.omega > 0.0, "PIR resonant frequencies must be > 0");
        require(r.gain >= 0.0, "PIR resonant gains must be >= 0");
    }
}

bool PirState::finite() const {
    if (!std::isfinite(integ)) {
        return false;
    }
    return std::all_of(res.begin(), res.end(), [](const std::array<double, 2>& p) {
        return std::isfinite(p[0]) && std::isfinite(p[1]);
    });
}

PirOutput pir_step(const PirConfig& cfg, PirState& st, double xref, double x, double yff,
                   double yad_input, double taus) {
    require(taus > 0.0, "pir_step: taus must be > 0");
    PirOutput out;
    if (!cfg.gammas.en) {
        st.enabled = false;
        return out;
    }
    if (!st.enabled && cfg.reset_on_enable) {
        st.integ = 0.0;
        st.res.assign(cfg.resonances.size(), {0.0, 0.0});
    }
    st.enabled = true;
    if (st.res.size() != cfg.resonances.size()) {
        st.res.assign(cfg.resonances.size(), {0.0, 0.0});
    }

    const double err = xref - x;
    double resonant = 0.0;
    for (const auto& r : st.res) {
        resonant += r[0];
    }
    out.y = cfg.kp * err + (cfg.gammas.i ? st.integ : 0.0) + (cfg.gammas.r ? resonant : 0.0) +
            yff - cfg.ad_gain * yad_input;
    out.ysat = std::clamp(out.y, cfg.out_min, cfg.out_max);
    out.saturated = out.ysat != out.y;

    const double err_aw = err + (cfg.gammas.aw ? cfg.aw_gain * (out.ysat - out.y) : 0.0);
    if (cfg.gammas.i) {
        st.integ += cfg.ki * taus * err_aw;
    }
    if (cfg.gammas.r) {
        // Impulse-invariant s / (s^2 + w^2): the impulse response cos(w t) is the real
        // part of a phasor rotating by w taus each sample.
        for (std::size_t h = 0; h < cfg.resonances.size(); ++h) {
            const double c = std::cos(cfg.resonances[h].omega * taus);
            const double s = std::sin(cfg.resonances[h].omega * taus);
            auto& z = st.res[h];
            const double re = c * z[0] - s * z[1];
            const double im = s * z[0] + c * z[1];
            z[0] = re + cfg.resonances[h].gain * taus * err_aw;
            z[1] = im;
        }
    }
    return out;
}

double psi_value(PsiShape shape, double theta_g) {
    return shape == PsiShape::Dc ? 1.0 : std::abs(std::sin(theta_g));
}

CascadeConfig synthesize_cascade(const ConverterParams& params, ConverterMode mode,
                                 const Bandwidths& bw, double il_max, double dduty_max,
                                 PsiShape psi) {
    params.validate();
    require(bw.current > 0.0 && bw.voltage > 0.0 && bw.balancing > 0.0,
            "bandwidths must be > 0");
    require(il_max > 0.0, "il_max must be > 0");
    require(dduty_max > 0.0 && dduty_max <= 1.0, "dduty_max must be in (0, 1]");
    constexpr double two_pi = 2.0 * std::numbers::pi;

    CascadeConfig cfg;
    cfg.mode = mode;
    cfg.il_max = il_max;
    cfg.dduty_max = dduty_max;
    cfg.psi = psi;
    cfg.bandwidths = bw;
    const double wg = two_pi * params.grid_frequency;

    // Current loop, output in volts, clamped to [0, vin] by the caller.
    cfg.current.kp = two_pi * bw.current * params.inductance;
    cfg.current.ki = cfg.current.kp * two_pi * bw.current / 10.0;
    cfg.current.aw_gain = 1.0 / cfg.current.kp;
    cfg.current.ad_gain = params.damping_resistance;
    cfg.current.gammas = {true, mode == ConverterMode::AcDcBuck, true, true};
    if (mode == ConverterMode::AcDcBuck) {
        cfg.current.resonances = {{2.0 * wg, cfg.current.ki}, {4.0 * wg, cfg.current.ki}};
    }

    // Voltage loop. mean(|sin|) over a half cycle is 2/pi.
    const double psi_mean = psi == PsiShape::Dc ? 1.0 : 2.0 / std::numbers::pi;
    cfg.voltage.kp = two_pi * bw.voltage * params.output_capacitance / psi_mean;
    cfg.voltage.ki = cfg.voltage.kp * two_pi * bw.voltage / 10.0;
    cfg.voltage.aw_gain = 1.0 / cfg.voltage.kp;
    // Keep the DC-regulating integrator across the grid zero crossings.
    cfg.voltage.reset_on_enable = false;
    switch (mode) {
        case ConverterMode::DcDc:
            cfg.voltage.gammas = {true, false, true, true};
            cfg.voltage.out_min = -il_max;
            cfg.voltage.out_max = il_max;
            break;
        case ConverterMode::AcDcBoost:
        case ConverterMode::AcDcBuck:
            cfg.voltage.gammas = {true, true, true, true};
            cfg.voltage.out_min = 0.0;
            cfg.voltage.out_max = il_max;
            cfg.voltage.resonances = {{2.0 * wg, 0.1 * cfg.voltage.ki},
                                      {4.0 * wg, 0.1 * cfg.voltage.ki}};
            break;
    }

    // Balancing loop: proportional only.
    const double cf_mean = params.flying_capacitance.mean();
    cfg.balancing.kp = two_pi * bw.balancing * cf_mean / (0.5 * il_max);
    cfg.balancing.gammas = {false, false, false, true};
    cfg.balancing.out_min = -dduty_max;
    cfg.balancing.out_max = dduty_max;
    return cfg;
}

VoltageControlOutput voltage_controller_step(ConverterMode mode, const CascadeConfig& cfg,
                                             PirState& st, double vout_ref, double vout,
                                             double theta_g, double vgrid, double taus) {
    VoltageControlOutput out;
    PirConfig pir = cfg.voltage;
    if (mode == ConverterMode::AcDcBuck) {
        pir.gammas.en = pir.gammas.en && std::abs(vgrid) > vout;
    }
    out.enabled = pir.gammas.en;
    const PirOutput y = pir_step(pir, st, vout_ref, vout, 0.0, 0.0, taus);
    switch (mode) {
        case ConverterMode::DcDc:
            out.y = std::clamp(y.ysat, -cfg.il_max, cfg.il_max);
            out.il_ref = out.y;
            break;
        case ConverterMode::AcDcBoost:
            out.y = std::min(y.ysat, cfg.il_max);
            out.il_ref = out.y * std::sin(theta_g);
            break;
        case ConverterMode::AcDcBuck:
            if (!out.enabled) {
                return out;
            }
            out.y = std::min(y.ysat, cfg.il_max);
            out.il_ref = out.y * psi_value(cfg.psi, theta_g) + cfg.phi_gain * std::sin(2.0 * theta_g);
            break;
    }
    return out;
}

Vector balancing_controller_step(const Vector& vhat, double vin, double vgrid, double vout,
                                 const CascadeConfig& cfg, const BalancingInputs& in) {
    const Eigen::Index caps = vhat.size();
    Vector dd = Vector::Zero(caps);
    if (std::abs(vgrid) <= cfg.balance_margin * vout) {
        return dd;
    }
    const bool slope_ff = cfg.balance_slope_ff && in.cf.size() == caps &&
                          std::abs(in.il) >= cfg.balance_ff_min_current;
    const double levels_m1 = static_cast<double>(caps + 1);
    PirConfig pir = cfg.balancing;
    pir.gammas = {false, false, false, true};
    pir.out_min = -cfg.dduty_max;
    pir.out_max = cfg.dduty_max;
    PirState scratch;
    for (Eigen::Index k = 0; k < caps; ++k) {
        const double share = static_cast<double>(k + 1) / levels_m1;
        const double yff = slope_ff ? in.cf[k] * share * in.dvin_dt / in.il : 0.0;
        // Raising dd_k with iL > 0 charges capacitor k, so dd_k follows (x* - vhat).
        dd[k] = pir_step(pir, scratch, share * vin, vhat[k], yff, 0.0, 1.0).ysat;
    }
    return dd;
}

CurrentControlOutput current_controller_step(const CascadeConfig& cfg, PirState& st,
                                             double il_ref, double il, const Vector& vhat,
                                             const Vector& dduty, double vout, double vin,
                                             double vgrid, double taus) {
    require(vhat.size() == dduty.size(), "current_controller_step: vhat and dd sizes differ");
    const Eigen::Index switches = dduty.size() + 1;
    CurrentControlOutput out;
    out.duty = DutyVector(Vector::Zero(switches));

    PirConfig pir = cfg.current;
    if (cfg.current_pure_p) {
        pir.gammas.aw = pir.gammas.r = pir.gammas.i = false;
        st = PirState{};
    }
    pir.gammas.en = pir.gammas.en && vin > 0.0;
    if (cfg.mode == ConverterMode::AcDcBuck) {
        pir.gammas.en = pir.gammas.en && std::abs(vgrid) > vout;
    }
    out.enabled = pir.gammas.en;
    if (!out.enabled) {
        st.enabled = false;
        return out;
    }
    pir.out_min = 0.0;
    pir.out_max = vin;
    // Average pole voltage is d_top vin - dd' vc, so feeding dd' vhat + vout forward
    // leaves the PIR to supply only the inductor voltage.
    const double yff = dduty.dot(vhat) + vout;
    const PirOutput y = pir_step(pir, st, il_ref, il, yff, il, taus);

    auto clamp_unit = [&out](double v) {
        const double c = std::clamp(v, 0.0, 1.0);
        if (c != v) {
            ++out.saturation_events;
        }
        return c;
    };
    Vector& d = out.duty.d;
    d[switches - 1] = clamp_unit(y.ysat / vin);
    for (Eigen::Index k = switches - 2; k >= 0; --k) {
        d[k] = clamp_unit(d[k + 1] - dduty[k]);
    }
    return out;
}

std::vector<std::string> check_time_scale_separation(const Bandwidths& bw, double fs,
                                                     double ratio) {
    std::vector<std::string> warnings;
    auto fmt = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    if (fs < ratio * bw.current) {
        warnings.push_back("sampling " + fmt(fs) + " Hz is not " + fmt(ratio) +
                           "x faster than the current loop (" + fmt(bw.current) + " Hz)");
    }
    if (bw.current < ratio * bw.voltage) {
        warnings.push_back("current loop " + fmt(bw.current) + " Hz is not " + fmt(ratio) +
                           "x faster than the voltage loop (" + fmt(bw.voltage) + " Hz)");
    }
    if (bw.estimator && *bw.estimator < ratio * bw.balancing) {
        warnings.push_back("estimator " + fmt(*bw.estimator) + " Hz is not " + fmt(ratio) +
                           "x faster than the balancing loop (" + fmt(bw.balancing) + " Hz)");
    }
    return warnings;
}

}  // namespace fcml
