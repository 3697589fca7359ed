#include <doctest.h>

#include "openhealth/energy.hpp"
#include "openhealth/rng.hpp"

using namespace openhealth;

namespace {

EnergyState unit_efficiency(double battery, double capacity = 1000) {
    EnergyState e;
    e.battery_mwh = battery;
    e.capacity_mwh = capacity;
    e.mppt_efficiency = 1.0;
    return e;
}

} // namespace

TEST_CASE("one hour of processing drains the profile power") {
    const DeviceProfile p;
    const auto har = account_energy(dwell_in(PowerState::Processing), p, AppKind::Har, unit_efficiency(500), 0.0,
                                    kMsPerHour);
    CHECK(har.consumed_mwh == 12.5);
    CHECK(har.state.battery_mwh == 487.5);
    const auto ges = account_energy(dwell_in(PowerState::Processing), p, AppKind::Gesture, unit_efficiency(500), 0.0,
                                    kMsPerHour);
    CHECK(ges.consumed_mwh == 10.0);
    CHECK(ges.state.battery_mwh == 490.0);
}

TEST_CASE("state powers") {
    const DeviceProfile p;
    CHECK(state_power_mw(PowerState::Sleep, p, AppKind::Har) == 0.3);
    CHECK(state_power_mw(PowerState::Sampling, p, AppKind::Har) == 12.5);
    CHECK(state_power_mw(PowerState::Processing, p, AppKind::Gesture) == 10.0);
    CHECK(state_power_mw(PowerState::Transmitting, p, AppKind::Gesture) == 15.0);
}

TEST_CASE("mixed dwell and harvest") {
    const DeviceProfile p;
    // half the hour sleeping, a quarter processing, a quarter transmitting
    const StateDwell d{0.5, 0.0, 0.25, 0.25};
    auto e = unit_efficiency(100);
    e.mppt_efficiency = 0.8;
    const auto r = account_energy(d, p, AppKind::Har, e, 10.0, 2 * kMsPerHour);
    CHECK(r.consumed_mwh == doctest::Approx(2 * (0.15 + 3.125 + 3.75)));
    CHECK(r.harvested_mwh == doctest::Approx(16.0));
    CHECK(r.state.battery_mwh == doctest::Approx(100 + 16 - 14.05));
}

TEST_CASE("spill at capacity and deficit at empty") {
    const DeviceProfile p;
    const auto full = account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, unit_efficiency(995), 10.0, kMsPerHour);
    CHECK(full.state.battery_mwh == 1000.0);
    CHECK(full.spilled_mwh == doctest::Approx(4.7));
    CHECK_FALSE(full.depleted);

    const auto empty = account_energy(dwell_in(PowerState::Transmitting), p, AppKind::Har, unit_efficiency(5), 0.0,
                                      kMsPerHour);
    CHECK(empty.state.battery_mwh == 0.0);
    CHECK(empty.deficit_mwh == doctest::Approx(10.0));
    CHECK(empty.depleted);

    const auto still_empty = account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, empty.state, 0.0, kMsPerHour);
    CHECK_FALSE(still_empty.depleted);
}

TEST_CASE("efficiencies apply on the right side of the net flow") {
    const DeviceProfile p;
    auto e = unit_efficiency(500);
    e.charge_efficiency = 0.9;
    e.discharge_efficiency = 0.8;
    const auto charge = account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, e, 10.3, kMsPerHour);
    CHECK(charge.applied_mwh == doctest::Approx(9.0));
    const auto drain = account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, e, 0.0, kMsPerHour);
    CHECK(drain.applied_mwh == doctest::Approx(-0.375));
}

TEST_CASE("ledger conservation and bounds over random steps") {
    const DeviceProfile p;
    Rng rng(99);
    auto e = unit_efficiency(500);
    e.mppt_efficiency = 0.95;
    e.charge_efficiency = 0.97;
    e.discharge_efficiency = 0.93;
    for (int i = 0; i < 5000; ++i) {
        StateDwell d{};
        double left = 1.0;
        for (std::size_t s = 0; s < 3; ++s) {
            d[s] = rng.uniform(0, left);
            left -= d[s];
        }
        d[3] = left;
        const auto r = account_energy(d, p, AppKind::Har, e, rng.uniform(0, 20), rng.uniform_int(1, 3 * kMsPerHour));
        // before + applied = after + spilled - deficit
        CHECK(std::abs(e.battery_mwh + r.applied_mwh - (r.state.battery_mwh + r.spilled_mwh - r.deficit_mwh)) < 1e-6);
        CHECK(r.state.battery_mwh >= 0.0);
        CHECK(r.state.battery_mwh <= e.capacity_mwh);
        CHECK(r.spilled_mwh * r.deficit_mwh == 0.0);
        e = r.state;
    }
}

TEST_CASE("accounting input checks") {
    const DeviceProfile p;
    CHECK_THROWS_AS(account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, EnergyState{}, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(account_energy(dwell_in(PowerState::Sleep), p, AppKind::Har, EnergyState{}, -1, 10), std::invalid_argument);
    EnergyState bad;
    bad.battery_mwh = 2000;
    CHECK_THROWS_AS(validate_energy_state(bad), std::invalid_argument);
    bad = {};
    bad.mppt_efficiency = 0;
    CHECK_THROWS_AS(validate_energy_state(bad), std::invalid_argument);
    CHECK_NOTHROW(validate_energy_state(EnergyState{}));
}

TEST_CASE("daylight profile shape") {
    const auto h = daylight_profile(6.0, 6, 18, 0.4);
    CHECK(h.slot_mw[0] == 0.4);
    CHECK(h.slot_mw[5] == 0.4);
    CHECK(h.slot_mw[18] == 0.4);
    CHECK(h.slot_mw[11] == doctest::Approx(h.slot_mw[12]));
    CHECK(h.slot_mw[11] > h.slot_mw[7]);
    CHECK(h.at(12 * kMsPerHour + 5) == h.slot_mw[12]);
    CHECK(h.at(kMsPerDay + 3 * kMsPerHour) == h.slot_mw[3]);
    CHECK(HarvestProfile::slot_of(-1) == 23);
    CHECK_THROWS_AS(daylight_profile(1, 18, 6), std::invalid_argument);
}

TEST_CASE("planner respects the budget and the per-slot cap") {
    const auto h = daylight_profile(6.0, 6, 18, 0.4);
    for (bool surplus : {false, true}) {
        PlanOptions opt;
        opt.spend_battery_surplus = surplus;
        const auto plan = plan_duty_cycle(h, 12.5, 0.3, unit_efficiency(500), opt);
        CAPTURE(surplus);
        CHECK(plan.feasible);
        CHECK(plan.planned_mwh <= plan.budget_mwh * (1 + 1e-12));
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            const double f = plan.active_fraction[s];
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
            if (!surplus) // energy-neutral per slot: planned draw within that slot's harvest
                CHECK(f * 12.5 + (1 - f) * 0.3 <= std::max(h.slot_mw[s], 0.3) + 1e-9);
        }
    }
}

TEST_CASE("planner gives more active time when battery surplus is spendable") {
    const auto h = daylight_profile(6.0, 6, 18, 0.4);
    PlanOptions neutral;
    neutral.spend_battery_surplus = false;
    const auto a = plan_duty_cycle(h, 12.5, 0.3, unit_efficiency(900), neutral);
    const auto b = plan_duty_cycle(h, 12.5, 0.3, unit_efficiency(900), {});
    CHECK(b.planned_mwh >= a.planned_mwh);
    CHECK(b.budget_mwh == doctest::Approx(a.budget_mwh + 700));
}

TEST_CASE("planner infeasibility and argument checks") {
    HarvestProfile dark;
    PlanOptions neutral;
    neutral.spend_battery_surplus = false;
    const auto plan = plan_duty_cycle(dark, 12.5, 0.3, unit_efficiency(0), neutral);
    CHECK_FALSE(plan.feasible);
    for (double f : plan.active_fraction)
        CHECK(f == 0.0);
    CHECK_THROWS_AS(plan_duty_cycle(dark, 0.0, 0.0, unit_efficiency(0)), std::invalid_argument);
    CHECK_THROWS_AS(plan_duty_cycle(dark, 1.0, 2.0, unit_efficiency(0)), std::invalid_argument);
    PlanOptions bad;
    bad.reserve_fraction = 2;
    CHECK_THROWS_AS(plan_duty_cycle(dark, 1.0, 0.1, unit_efficiency(0), bad), std::invalid_argument);
}
