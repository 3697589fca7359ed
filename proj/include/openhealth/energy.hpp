#pragma once

// Battery bookkeeping for an energy-harvesting node and the per-hour duty
// planner that allocates the harvest forecast to active time.

#include <array>
#include <cstdint>

#include "openhealth/core.hpp"
#include "openhealth/firmware.hpp"

namespace openhealth {

inline constexpr int kSlotsPerDay = 24;
inline constexpr std::int64_t kMsPerHour = 3'600'000;
inline constexpr std::int64_t kMsPerDay = 24 * kMsPerHour;

// Piecewise-constant harvester output in mW, one value per hour of the day,
// repeating every day.
struct HarvestProfile {
    std::array<double, kSlotsPerDay> slot_mw{};

    double at(std::int64_t t_ms) const;
    static int slot_of(std::int64_t t_ms);
};

// Half-sine daylight curve between sunrise and sunset hours on top of a
// constant floor, sampled at each slot midpoint.
HarvestProfile daylight_profile(double peak_mw, int sunrise_hour = 6, int sunset_hour = 18, double floor_mw = 0.0);

struct EnergyState {
    double battery_mwh = 500.0;
    double capacity_mwh = 1000.0;
    double mppt_efficiency = 0.95;
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;

    friend bool operator==(const EnergyState&, const EnergyState&) = default;
};

void validate_energy_state(const EnergyState& e);

double state_power_mw(PowerState state, const DeviceProfile& profile, AppKind app);

// Fraction of the interval spent in each PowerState (indexed by enum value).
using StateDwell = std::array<double, 4>;

inline StateDwell dwell_in(PowerState s) {
    StateDwell d{};
    d[static_cast<std::size_t>(s)] = 1.0;
    return d;
}

// One accounting step. All quantities in mWh.
//   harvested = mppt * harvest_mw * dt
//   consumed  = sum(state_power * dwell) * dt
//   applied   = net * charge_eff  if net >= 0, net / discharge_eff otherwise
//   battery'  = battery + applied - spilled + deficit, clamped to [0, capacity]
// spilled is energy refused by a full battery, deficit is demand a flat
// battery could not serve.
struct EnergyStep {
    EnergyState state;
    double harvested_mwh = 0.0;
    double consumed_mwh = 0.0;
    double applied_mwh = 0.0;
    double spilled_mwh = 0.0;
    double deficit_mwh = 0.0;
    bool depleted = false; // battery reached 0 from a positive level
};

EnergyStep account_energy(const StateDwell& dwell, const DeviceProfile& profile, AppKind app,
                          const EnergyState& energy, double harvest_mw, std::int64_t dt_ms);

// Battery level at which a depleted node may leave forced sleep.
inline constexpr double kRecoveryFraction = 0.05;

struct PlanOptions {
    double reserve_fraction = 0.2;
    // false plans an energy-neutral day: the battery above reserve is left
    // untouched and each slot is additionally capped so its planned
    // consumption does not exceed its own forecast harvest wherever that
    // harvest covers sleep power.
    bool spend_battery_surplus = true;
};

struct DutyPlan {
    std::array<double, kSlotsPerDay> active_fraction{};
    double planned_mwh = 0.0; // sum over slots of f*A + (1-f)*S
    double budget_mwh = 0.0;
    bool feasible = true; // false when even all-sleep exceeds the budget
};

// Active fraction per slot = min(1, s * base_i), base_i = min(1, H_i / A_i),
// with the global factor s as large as the budget
//   sum planned <= sum H_i + max(0, battery - reserve)   (surplus spending on)
// allows. H_i = mppt * forecast_i * 1 h, A_i = active_mw * 1 h, S = sleep_mw
// * 1 h. An all-zero forecast spreads the battery surplus uniformly.
DutyPlan plan_duty_cycle(const HarvestProfile& forecast, double active_mw, double sleep_mw,
                         const EnergyState& energy, const PlanOptions& options = {});

} // namespace openhealth
