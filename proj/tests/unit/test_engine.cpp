#include "fcml/engine.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace fcml;
using Catch::Approx;

namespace {

Scenario dc_scenario(double vin, double duration) {
    Scenario sc;
    sc.params = ConverterParams::reference_design();
    sc.params.dc_input_voltage = vin;
    sc.cascade = synthesize_cascade(sc.params, ConverterMode::DcDc, Bandwidths{});
    sc.duration = duration;
    sc.vout_ref = 60.0;
    return sc;
}

double stored_energy(const PlantState& x, const ConverterParams& p) {
    double e = 0.5 * p.inductance * x.il * x.il + 0.5 * p.output_capacitance * x.vout * x.vout;
    for (Eigen::Index k = 0; k < x.vc.size(); ++k) {
        e += 0.5 * p.flying_capacitance[k] * x.vc[k] * x.vc[k];
    }
    return e;
}

}  // namespace

TEST_CASE("grid source", "[engine]") {
    const auto p = ConverterParams::reference_design();
    const auto g0 = grid_source(0.0, p);
    CHECK(g0.vgrid == 0.0);
    CHECK(g0.vin == 0.0);
    const auto q = grid_source(0.25 / p.grid_frequency, p);
    CHECK(q.vin == Approx(std::sqrt(2.0) * p.grid_vrms));
    CHECK(q.theta == Approx(std::numbers::pi / 2));
    for (double t : {1.3e-3, 4.1e-3, 7.7e-3}) {
        CHECK(grid_source(t + 1.0 / (2.0 * p.grid_frequency), p).vin == Approx(grid_source(t, p).vin));
    }
    auto dc = p;
    dc.dc_input_voltage = 300.0;
    CHECK(grid_source(1e-3, dc).vin == 300.0);
}

TEST_CASE("zero grid keeps every channel at zero", "[engine]") {
    Scenario sc = Scenario::table3();
    sc.params.grid_vrms = 0.0;
    sc.duration = 2e-3;
    sc.events.clear();
    const auto log = run_scenario(sc);
    REQUIRE(log.samples() > 10);
    for (std::size_t n = 0; n < log.samples(); ++n) {
        CHECK(log.vin[n] == 0.0);
        CHECK(log.il[n] == 0.0);
        CHECK(log.vout[n] == 0.0);
        CHECK(log.vc[n].isZero());
        CHECK(log.vhat[n].isZero());
        CHECK(log.stress[n].isZero());
        CHECK(log.est_error[n] == 0.0);
    }
}

TEST_CASE("runs are deterministic", "[engine][property]") {
    Scenario sc = Scenario::table3();
    sc.duration = 3e-3;
    sc.estimator.noise_vsw = 0.5;
    sc.estimator.noise_il = 0.05;
    sc.estimator.seed = 7;
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    REQUIRE(a.samples() == b.samples());
    CHECK(a.il == b.il);
    CHECK(a.vout == b.vout);
    CHECK(a.est_error == b.est_error);
    for (std::size_t n = 0; n < a.samples(); ++n) {
        CHECK(a.vhat[n] == b.vhat[n]);
        CHECK(a.duty[n] == b.duty[n]);
    }
    sc.estimator.seed = 8;
    CHECK(run_scenario(sc).est_error != a.est_error);
}

TEST_CASE("sample spacing is uniform", "[engine]") {
    Scenario sc = Scenario::table3();
    sc.duration = 1e-3;
    const auto log = run_scenario(sc);
    for (std::size_t n = 1; n < log.samples(); ++n) {
        CHECK(log.t[n] - log.t[n - 1] == Approx(log.taus).epsilon(1e-9));
    }
}

TEST_CASE("energy balance over the switched trajectory", "[engine][property]") {
    Scenario sc = dc_scenario(300.0, 4e-3);
    const ConverterParams& p = sc.params;
    const double vin = p.dc_input_voltage;
    PlantState prev = PlantState::zero(p);
    prev.vc = balanced_voltages(p.levels, vin);
    const double e0 = stored_energy(prev, p);
    double e_in = 0.0, e_load = 0.0;
    (void)run_scenario(sc, [&](const PlantState& x, const SwitchVector& s, bool gates_on, double dt) {
        if (gates_on) {
            e_in += vin * s.top() * 0.5 * (prev.il + x.il) * dt;
        }
        e_load += 0.5 * (prev.vout * prev.vout + x.vout * x.vout) / p.load_resistance * dt;
        prev = x;
    });
    const double e1 = stored_energy(prev, p);
    REQUIRE(e_in > 0.05);
    CHECK(std::abs(e_in - (e1 - e0) - e_load) <= 0.01 * e_in);
}

TEST_CASE("comparator outcomes follow the latched duty one sample late", "[engine][property]") {
    Scenario sc = dc_scenario(300.0, 2e-3);
    std::vector<double> sub_t;
    std::vector<SwitchVector> sub_s;
    std::vector<std::uint8_t> sub_gates;
    const auto log = run_scenario(sc, [&](const PlantState& x, const SwitchVector& s, bool g, double) {
        sub_t.push_back(x.t);
        sub_s.push_back(s);
        sub_gates.push_back(g ? 1 : 0);
    });
    const double dt = log.dt;
    const auto per_period =
        static_cast<std::size_t>(std::llround(sc.params.carrier_period() / dt));
    const auto per_sample = static_cast<std::size_t>(std::llround(log.taus / dt));

    // The first interval runs with gates off although a duty was computed at sample 0.
    REQUIRE(per_sample < sub_gates.size());
    for (std::size_t i = 0; i < per_sample; ++i) {
        CHECK(sub_gates[i] == 0);
    }
    CHECK(log.gates_on[0] == 0);

    // Duty fidelity: each whole carrier period inside [t_n, t_n+1) averages to duty[n].
    int periods = 0;
    for (std::size_t n = 1; n + 1 < log.samples(); ++n) {
        if (!log.gates_on[n]) {
            continue;
        }
        const std::size_t begin = n * per_sample;
        for (std::size_t start = begin; start + per_period <= begin + per_sample; start += per_period) {
            for (std::size_t k = 0; k < sub_s[start].size(); ++k) {
                int on = 0;
                for (std::size_t i = start; i < start + per_period; ++i) {
                    on += sub_s[i].states[k];
                }
                const double avg = static_cast<double>(on) / static_cast<double>(per_period);
                CHECK(std::abs(avg - log.duty[n][static_cast<Eigen::Index>(k)]) <=
                      dt / sc.params.carrier_period() + 1e-12);
            }
            ++periods;
        }
    }
    CHECK(periods > 100);
}

TEST_CASE("feedforward alone tracks the capacitors with exact parameters", "[engine]") {
    // The update integrates the averaged capacitor current, so the sampled error is
    // the PWM ripple at that instant: at most one carrier-shift pulse of charge.
    auto max_error = [](const WaveformLog& log, double from, double to = INFINITY) {
        double worst = 0.0;
        for (std::size_t n = 0; n < log.samples(); ++n) {
            if (log.t[n] >= from && log.t[n] < to) {
                worst = std::max(worst, log.est_error[n]);
            }
        }
        return worst;
    };
    SECTION("light load stays within 1% of the input") {
        Scenario sc = dc_scenario(300.0, 0.02);
        sc.params.load_resistance = 50.0;
        sc.vout_initial = 60.0;
        sc.estimator.fb_enabled = false;
        CHECK(max_error(run_scenario(sc), 0.0) < 0.01 * sc.params.dc_input_voltage);
    }
    SECTION("full load is ripple bounded and does not drift") {
        Scenario sc = dc_scenario(300.0, 0.04);
        sc.vout_initial = 60.0;
        sc.estimator.fb_enabled = false;
        const auto log = run_scenario(sc);
        const auto& p = sc.params;
        const double ripple = sc.cascade.il_max * p.carrier_period() / (p.levels - 1) /
                              p.flying_capacitance.maxCoeff();
        CHECK(max_error(log, 0.0) < ripple);
        CHECK(max_error(log, 0.02) < 1.5 * max_error(log, 0.0, 0.02));
    }
}

TEST_CASE("DC-DC regulation and the load step envelope", "[engine]") {
    Scenario sc = dc_scenario(300.0, 0.12);
    sc.vout_initial = 60.0;
    sc.events = {{0.04, "step_rload", 10.0}};
    const auto log = run_scenario(sc);
    REQUIRE(log.segments.size() == 2);
    CHECK(log.segments[0].t_end == Approx(0.04).margin(log.dt));
    double dev = 0.0;
    for (std::size_t n = 0; n < log.samples(); ++n) {
        if (log.t[n] > 0.04) {
            dev = std::max(dev, std::abs(log.vout[n] - 60.0));
        }
    }
    CHECK(dev > 0.01);  // the step is visible
    CHECK(dev < 6.0);   // and bounded
    CHECK(log.vout.back() == Approx(60.0).margin(0.6));
    CHECK(log.overall().max_stress < 100.0);
}

TEST_CASE("events", "[engine]") {
    RuntimeSettings rt{60.0, 5.0, 0.047, true, true};
    apply_event(rt, {0.0, "set_ff_enabled", 0.0});
    CHECK_FALSE(rt.ff_enabled);
    apply_event(rt, {0.0, "set_fb_enabled", 0.0});
    CHECK_FALSE(rt.fb_enabled);
    apply_event(rt, {0.0, "step_vout_ref", 48.0});
    CHECK(rt.vout_ref == 48.0);
    apply_event(rt, {0.0, "step_rload", 10.0});
    CHECK(rt.load_resistance == 10.0);
    apply_event(rt, {0.0, "set_alpha", 0.1});
    CHECK(rt.alpha == 0.1);
    CHECK_THROWS_AS(apply_event(rt, {0.0, "explode", 1.0}), ValidationError);
    CHECK_THROWS_AS(apply_event(rt, {0.0, "step_rload", 0.0}), ValidationError);
}

TEST_CASE("scenario validation", "[engine]") {
    Scenario sc = Scenario::table3();
    sc.duration = 0.0;
    CHECK_THROWS_AS(run_scenario(sc), ValidationError);
    sc = Scenario::table3();
    sc.ns = 5;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = Scenario::table3();
    sc.estimator.alpha = 0.6;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc.estimator.allow_unstable_alpha = true;
    CHECK_NOTHROW(sc.validate());
    sc = Scenario::table3();
    sc.events = {{0.1, "set_alpha", 0.05}, {0.05, "set_alpha", 0.02}};
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = Scenario::table3();
    sc.events = {{0.1, "bogus", 0.0}};
    CHECK_THROWS_AS(sc.validate(), ValidationError);
}

TEST_CASE("divergence aborts the run", "[engine]") {
    Scenario sc = dc_scenario(300.0, 0.05);
    sc.params.flying_capacitance *= 1e-9;
    CHECK_THROWS_AS(run_scenario(sc), DivergenceError);
}

TEST_CASE("settling time helper", "[engine]") {
    const std::vector<double> t{0, 1, 2, 3, 4};
    CHECK(settling_time(t, {0, 50, 61, 60, 60}, 60.0, 0.02, 4.0) == Approx(2.0));
    CHECK(settling_time(t, {0, 60, 70, 60, 60}, 60.0, 0.02, 4.0) == Approx(3.0));
    CHECK_FALSE(settling_time(t, {0, 0, 0, 0, 0}, 60.0, 0.02, 4.0).has_value());
}
