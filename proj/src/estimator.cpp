#include "fcml/estimator.hpp"

#include "fcml/plant.hpp"

namespace fcml {

EstimatorState EstimatorState::initial(int levels, double alpha, double vin0) {
    EstimatorState s;
    s.vhat = balanced_voltages(levels, vin0);
    s.alpha = alpha;
    s.prev_dduty = Vector::Zero(levels - 2);
    return s;
}

Vector feedback_update(const Vector& vhat, const Vector& ds, double vsw, int s_top, double vin,
                       double alpha) {
    require(vhat.size() == ds.size(), "feedback_update: vhat and dS sizes differ");
    require(alpha >= 0.0, "feedback_update: alpha must be >= 0");
    // (I - a dS dS') v + a r dS  ==  v + a (r - dS' v) dS
    const double residual = static_cast<double>(s_top) * vin - vsw - ds.dot(vhat);
    return vhat + alpha * residual * ds;
}

Vector feedforward_update(double il, const Vector& prev_dduty, const Vector& cf, double taus) {
    require(prev_dduty.size() == cf.size(), "feedforward_update: dd and Cf sizes differ");
    require(taus > 0.0, "feedforward_update: taus must be > 0");
    return (taus * il) * prev_dduty.cwiseQuotient(cf);
}

void hybrid_update_in_place(EstimatorState& est, const EstimatorSample& sample, double taus,
                            const Vector& cf) {
    const double alpha_eff = (est.fb_enabled && sample.feedback_valid) ? est.alpha : 0.0;
    if (alpha_eff > 0.0) {
        est.vhat = feedback_update(est.vhat, sample.ds, sample.vsw, sample.s_top, sample.vin,
                                   alpha_eff);
    }
    if (est.ff_enabled) {
        est.vhat += feedforward_update(sample.il, est.prev_dduty, cf, taus);
    }
    if (sample.next_dduty.size() == est.vhat.size()) {
        est.prev_dduty = sample.next_dduty;
    } else {
        est.prev_dduty.setZero(est.vhat.size());
    }
}

EstimatorState hybrid_update(const EstimatorState& est, const EstimatorSample& sample, double taus,
                             const Vector& cf) {
    EstimatorState out = est;
    hybrid_update_in_place(out, sample, taus, cf);
    return out;
}

bool gate_feedback(const DutyVector& d, double margin) { return !near_dead(d, margin); }

double alpha_stability_limit(int levels) {
    require(levels >= 3, "levels must be >= 3");
    return 2.0 / static_cast<double>(levels - 2);
}

double alpha_upper_bound_hf(double ve_hf, double taus, int levels, double dvin_dt_max) {
    require(ve_hf > 0.0 && taus > 0.0 && dvin_dt_max > 0.0,
            "alpha_upper_bound_hf: inputs must be positive");
    require(levels >= 3, "levels must be >= 3");
    return 2.0 * ve_hf / (taus * static_cast<double>(levels - 2) * dvin_dt_max);
}

}  // namespace fcml
