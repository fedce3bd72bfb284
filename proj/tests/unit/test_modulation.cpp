#include "fcml/modulation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fcml;
using Catch::Approx;

TEST_CASE("carrier phase convention", "[modulation]") {
    const CarrierBank bank(6, 120e3);
    const double T = bank.period();
    CHECK(bank.value(1, 0.0) == 0.0);
    CHECK(bank.value(1, T / 2) == Approx(1.0));
    CHECK(bank.value(2, 0.0) == Approx(0.4));
    CHECK_THROWS_AS(bank.value(0, 0.0), ValidationError);
    CHECK_THROWS_AS(bank.value(6, 0.0), ValidationError);
}

TEST_CASE("carrier periodicity and range", "[modulation][property]") {
    const CarrierBank bank(5, 100e3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    for (int i = 0; i < 500; ++i) {
        const double t = u(rng);
        for (int k = 1; k <= 4; ++k) {
            const double v = bank.value(k, t);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(bank.value(k, t + bank.period()) == Approx(v).margin(1e-9));
        }
    }
}

TEST_CASE("switch states examples", "[modulation]") {
    const CarrierBank bank(6, 120e3);
    const double T = bank.period();
    for (double t : {0.0, T / 7, T / 3, 0.9 * T}) {
        CHECK(bank.switch_states(DutyVector::uniform(5, 0.0), t) == SwitchVector(5, 0));
        CHECK(bank.switch_states(DutyVector::uniform(5, 1.0), t) == SwitchVector(5, 1));
    }
    // A saturated duty stays on through the carrier peak.
    CHECK(bank.switch_states(DutyVector::uniform(5, 1.0), T / 2) == SwitchVector(5, 1));
    // Interior ties resolve to off: carrier 3 is exactly 0.5 at half-tick 13.
    const CarrierGrid grid(6, 1);
    REQUIRE(grid.value(3, 13) == 0.5);
    CHECK(grid.switch_states(DutyVector::uniform(5, 0.5), 13).states[2] == 0);
    const auto s = bank.switch_states(DutyVector{0.5, 0, 0, 0, 0}, T / 8);
    CHECK(s.states[0] == 1);
}

TEST_CASE("duty fidelity over one carrier period", "[modulation][property]") {
    const int levels = 6;
    const std::int64_t sub = 100;
    const CarrierGrid grid(levels, sub);
    const std::int64_t ticks = grid.ticks_per_period();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector d(levels - 1);
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            d[k] = u(rng);
        }
        const DutyVector duty(d);
        std::vector<int> on(levels - 1, 0);
        SwitchVector s;
        for (std::int64_t i = 0; i < ticks; ++i) {
            grid.switch_states(duty, 2 * i + 1, s);
            for (int k = 0; k < levels - 1; ++k) {
                on[k] += s.states[k];
            }
        }
        for (int k = 0; k < levels - 1; ++k) {
            CHECK(std::abs(static_cast<double>(on[k]) / ticks - d[k]) <= 1.0 / ticks + 1e-12);
        }
    }
}

TEST_CASE("uniform duty is invariant under the cyclic carrier shift", "[modulation][property]") {
    const int levels = 6;
    const CarrierBank bank(levels, 120e3);
    const double shift = bank.period() / (levels - 1);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const DutyVector d = DutyVector::uniform(levels - 1, u(rng));
        const double t = u(rng) * bank.period();
        const auto a = bank.switch_states(d, t);
        const auto b = bank.switch_states(d, t + shift);
        for (int k = 0; k + 1 < levels - 1; ++k) {
            CHECK(b.states[k + 1] == a.states[k]);
        }
    }
}

TEST_CASE("integer carrier grid agrees with the continuous bank", "[modulation]") {
    const int levels = 6;
    const std::int64_t sub = 52;
    const CarrierGrid grid(levels, sub);
    const CarrierBank bank(levels, 120e3);
    const double dt_half = bank.period() / (2.0 * grid.ticks_per_period());
    for (std::int64_t h = 0; h < 2 * grid.ticks_per_period(); h += 7) {
        for (int k = 1; k < levels; ++k) {
            CHECK(grid.value(k, h) == Approx(bank.value(k, h * dt_half)).margin(1e-9));
        }
    }
}

TEST_CASE("dead duty sets", "[modulation]") {
    const auto d6 = dead_duty_set(6);
    REQUIRE(d6.size() == 4);
    CHECK(d6[0] == Approx(0.2));
    CHECK(d6[3] == Approx(0.8));
    const auto d5 = dead_duty_set(5);
    REQUIRE(d5.size() == 1);
    CHECK(d5[0] == Approx(0.5));
    CHECK(dead_duty_set(3).empty());
}

TEST_CASE("near dead proximity", "[modulation]") {
    CHECK_FALSE(near_dead(DutyVector::uniform(5, 0.5), 0.03));
    CHECK(near_dead(DutyVector{0.5, 0.5, 0.41, 0.5, 0.5}, 0.03));
    CHECK(near_dead(DutyVector{0.5, 0.5, 0.5, 0.6, 0.5}, 0.0));
    CHECK(near_dead(DutyVector{0.5, 0.5, 0.43, 0.5, 0.5}, 0.03));
    CHECK_FALSE(near_dead(DutyVector{0.5, 0.5, 0.44, 0.5, 0.5}, 0.03));
    CHECK_THROWS_AS(near_dead(DutyVector::uniform(5, 0.5), -0.1), ValidationError);
}
