#include "fcml/plant.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace fcml;
using Catch::Approx;

namespace {

ConverterParams six_level() { return ConverterParams::reference_design(); }

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

}  // namespace

TEST_CASE("zero state and zero input give zero derivatives", "[plant]") {
    const auto p = six_level();
    const auto d = plant_derivatives(PlantState::zero(p), SwitchVector(5), 0.0, p);
    CHECK(d.dvc.isZero());
    CHECK(d.dil == 0.0);
    CHECK(d.dvout == 0.0);
}

TEST_CASE("bottom switch on discharges the first flying capacitor", "[plant]") {
    const auto p = six_level();
    PlantState x = PlantState::zero(p);
    x.il = 10.0;
    const auto d = plant_derivatives(x, SwitchVector{1, 0, 0, 0, 0}, 0.0, p);
    CHECK(d.dvc[0] == Approx(-10.0 / 2.2e-6).epsilon(1e-12));
    CHECK(d.dvc.tail(3).isZero());
}

TEST_CASE("inductor slope with only the top switch on", "[plant]") {
    const auto p = six_level();
    PlantState x = PlantState::zero(p);
    x.vc = balanced_voltages(6, 500.0);
    x.vout = 60.0;
    const auto d = plant_derivatives(x, SwitchVector{0, 0, 0, 0, 1}, 500.0, p);
    CHECK(d.dil == Approx(4.0e5).epsilon(1e-12));
}

TEST_CASE("dimension mismatch is rejected", "[plant]") {
    const auto p = six_level();
    CHECK_THROWS_AS(plant_derivatives(PlantState::zero(p), SwitchVector(4), 1.0, p), ValidationError);
    CHECK_THROWS_AS(pole_voltage(SwitchVector(4), Vector::Zero(4), 1.0), ValidationError);
}

TEST_CASE("pole voltage examples", "[plant]") {
    const Vector vc = balanced_voltages(6, 500.0);
    CHECK(pole_voltage(SwitchVector(5, 0), vc, 500.0) == 0.0);
    CHECK(pole_voltage(SwitchVector(5, 1), vc, 500.0) == 500.0);
    CHECK(pole_voltage(SwitchVector{1, 0, 0, 0, 0}, vc, 500.0) == Approx(100.0));
}

TEST_CASE("switch stress examples", "[plant]") {
    const Vector s = switch_stress(vec({100, 200, 300, 400}), 500.0);
    CHECK(s.isApprox(Vector::Constant(5, 100.0)));
    CHECK(switch_stress(Vector::Zero(4), 0.0).isZero());
    CHECK(switch_stress(vec({30, 90}), 100.0).isApprox(vec({30, 60, 10})));
}

TEST_CASE("balanced profile gives equal stresses", "[plant][property]") {
    for (int n = 3; n <= 9; ++n) {
        const double vin = 37.0 * n;
        const Vector s = switch_stress(balanced_voltages(n, vin), vin);
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            CHECK(s[k] == Approx(vin / (n - 1)).epsilon(1e-14));
        }
    }
}

TEST_CASE("pole voltage is linear in (vc, vin)", "[plant][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-300.0, 300.0);
    std::bernoulli_distribution bit(0.5);
    for (int trial = 0; trial < 200; ++trial) {
        SwitchVector s(5);
        for (auto& b : s.states) {
            b = bit(rng) ? 1 : 0;
        }
        Vector vc(4);
        for (Eigen::Index k = 0; k < 4; ++k) {
            vc[k] = u(rng);
        }
        const double vin = std::abs(u(rng));
        const double a = u(rng) / 100.0;
        CHECK(pole_voltage(s, a * vc, a * vin) ==
              Approx(a * pole_voltage(s, vc, vin)).margin(1e-9));
    }
}

TEST_CASE("charge conservation under piecewise-constant switching", "[plant][property]") {
    // Integrate with explicit Euler on a constant-current stub (L very large) and compare
    // vc changes with the independently accumulated charge integral.
    ConverterParams p = six_level();
    p.inductance = 1e3;
    p.flying_capacitance = vec({2.2e-6, 1.0e-6, 3.3e-6, 4.7e-6});
    std::mt19937_64 rng(11);
    std::bernoulli_distribution bit(0.5);
    PlantState x = PlantState::zero(p);
    x.vc = balanced_voltages(6, 400.0);
    x.il = 8.0;
    const Vector vc0 = x.vc;
    Vector charge = Vector::Zero(4);
    const double dt = 1e-8;
    for (int seg = 0; seg < 50; ++seg) {
        SwitchVector s(5);
        for (auto& b : s.states) {
            b = bit(rng) ? 1 : 0;
        }
        const Vector ds = s.delta();
        for (int i = 0; i < 20; ++i) {
            const auto d = plant_derivatives(x, s, 400.0, p);
            charge += dt * x.il * ds;
            x.vc += dt * d.dvc;
            x.il += dt * d.dil;
            x.vout += dt * d.dvout;
        }
    }
    for (Eigen::Index k = 0; k < 4; ++k) {
        CHECK(x.vc[k] - vc0[k] == Approx(charge[k] / p.flying_capacitance[k]).margin(1e-9));
    }
}

TEST_CASE("parameter validation", "[plant]") {
    ConverterParams p = six_level();
    CHECK_NOTHROW(p.validate());
    p.levels = 2;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = six_level();
    p.flying_capacitance = Vector::Constant(3, 1e-6);
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = six_level();
    p.inductance = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = six_level();
    p.flying_capacitance[2] = -1e-6;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("freewheeling keeps capacitor voltages and blocks reverse current", "[plant]") {
    const auto p = six_level();
    PlantState x = PlantState::zero(p);
    x.vout = 30.0;
    PlantDerivative d;
    freewheel_derivatives_into(x, p, d);
    CHECK(d.dvc.isZero());
    CHECK(d.dil == 0.0);
    x.il = 5.0;
    freewheel_derivatives_into(x, p, d);
    CHECK(d.dil == Approx(-30.0 / p.inductance));
}
