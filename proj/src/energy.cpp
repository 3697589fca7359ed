#include "openhealth/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace openhealth {

int HarvestProfile::slot_of(std::int64_t t_ms) {
    const auto in_day = ((t_ms % kMsPerDay) + kMsPerDay) % kMsPerDay;
    return static_cast<int>(in_day / kMsPerHour);
}

double HarvestProfile::at(std::int64_t t_ms) const { return slot_mw[static_cast<std::size_t>(slot_of(t_ms))]; }

HarvestProfile daylight_profile(double peak_mw, int sunrise_hour, int sunset_hour, double floor_mw) {
    if (peak_mw < 0 || floor_mw < 0 || sunrise_hour < 0 || sunset_hour > 24 || sunrise_hour >= sunset_hour)
        throw std::invalid_argument("invalid daylight profile parameters");
    HarvestProfile p;
    const double span = sunset_hour - sunrise_hour;
    for (int h = 0; h < kSlotsPerDay; ++h) {
        const double mid = h + 0.5;
        double v = floor_mw;
        if (mid > sunrise_hour && mid < sunset_hour)
            v += peak_mw * std::sin(std::numbers::pi * (mid - sunrise_hour) / span);
        p.slot_mw[static_cast<std::size_t>(h)] = v;
    }
    return p;
}

void validate_energy_state(const EnergyState& e) {
    if (!(e.capacity_mwh > 0))
        throw std::invalid_argument("battery capacity must be > 0");
    if (!(e.battery_mwh >= 0 && e.battery_mwh <= e.capacity_mwh))
        throw std::invalid_argument("battery level must be within [0, capacity]");
    for (double eff : {e.mppt_efficiency, e.charge_efficiency, e.discharge_efficiency})
        if (!(eff > 0 && eff <= 1))
            throw std::invalid_argument("efficiencies must be in (0, 1]");
}

double state_power_mw(PowerState state, const DeviceProfile& profile, AppKind app) {
    switch (state) {
    case PowerState::Sleep: return profile.p_sleep_mw;
    case PowerState::Sampling:
    case PowerState::Processing: return active_power_mw(profile, app);
    case PowerState::Transmitting: return profile.p_tx_mw;
    }
    return 0.0;
}

EnergyStep account_energy(const StateDwell& dwell, const DeviceProfile& profile, AppKind app,
                          const EnergyState& energy, double harvest_mw, std::int64_t dt_ms) {
    if (dt_ms <= 0)
        throw std::invalid_argument("accounting interval must be > 0");
    if (harvest_mw < 0)
        throw std::invalid_argument("harvest power must be >= 0");
    const double hours = static_cast<double>(dt_ms) / static_cast<double>(kMsPerHour);

    double load_mw = 0.0;
    for (std::size_t s = 0; s < dwell.size(); ++s)
        load_mw += state_power_mw(static_cast<PowerState>(s), profile, app) * dwell[s];

    EnergyStep r;
    r.harvested_mwh = energy.mppt_efficiency * harvest_mw * hours;
    r.consumed_mwh = load_mw * hours;
    const double net = r.harvested_mwh - r.consumed_mwh;
    r.applied_mwh = net >= 0 ? net * energy.charge_efficiency : net / energy.discharge_efficiency;

    const double raw = energy.battery_mwh + r.applied_mwh;
    r.state = energy;
    if (raw > energy.capacity_mwh) {
        r.spilled_mwh = raw - energy.capacity_mwh;
        r.state.battery_mwh = energy.capacity_mwh;
    } else if (raw < 0.0) {
        r.deficit_mwh = -raw;
        r.state.battery_mwh = 0.0;
    } else {
        r.state.battery_mwh = raw;
    }
    r.depleted = energy.battery_mwh > 0.0 && r.state.battery_mwh == 0.0;
    return r;
}

DutyPlan plan_duty_cycle(const HarvestProfile& forecast, double active_mw, double sleep_mw,
                         const EnergyState& energy, const PlanOptions& options) {
    if (!(active_mw > 0) || !(sleep_mw >= 0) || sleep_mw > active_mw)
        throw std::invalid_argument("need active_mw > 0 and 0 <= sleep_mw <= active_mw");
    if (!(options.reserve_fraction >= 0 && options.reserve_fraction <= 1))
        throw std::invalid_argument("reserve fraction must be in [0, 1]");
    for (double h : forecast.slot_mw)
        if (!(h >= 0))
            throw std::invalid_argument("harvest forecast must be nonnegative");

    std::array<double, kSlotsPerDay> base{};
    double harvest_total = 0.0;
    bool any_harvest = false;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double h = energy.mppt_efficiency * forecast.slot_mw[i];
        harvest_total += h;
        base[i] = std::min(1.0, h / active_mw);
        any_harvest = any_harvest || base[i] > 0;
    }
    if (!any_harvest)
        base.fill(1.0);

    // Largest fraction a slot can fund from its own harvest:
    // f * A + (1 - f) * S <= H.
    std::array<double, kSlotsPerDay> cap{};
    cap.fill(1.0);
    if (!options.spend_battery_surplus)
        for (std::size_t i = 0; i < cap.size(); ++i) {
            const double h = energy.mppt_efficiency * forecast.slot_mw[i];
            cap[i] = active_mw > sleep_mw ? std::clamp((h - sleep_mw) / (active_mw - sleep_mw), 0.0, 1.0) : 1.0;
        }

    DutyPlan plan;
    const double reserve = options.reserve_fraction * energy.capacity_mwh;
    plan.budget_mwh = harvest_total + (options.spend_battery_surplus ? std::max(0.0, energy.battery_mwh - reserve) : 0.0);

    auto planned = [&](double s) {
        double total = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double f = std::min(cap[i], s * base[i]);
            total += f * active_mw + (1.0 - f) * sleep_mw;
        }
        return total;
    };

    double lo = 0.0;
    if (planned(0.0) > plan.budget_mwh) {
        plan.feasible = false;
    } else {
        double min_base = 1.0;
        for (double b : base)
            if (b > 0)
                min_base = std::min(min_base, b);
        double hi = 1.0 / min_base; // every slot with harvest saturates at 1
        if (planned(hi) <= plan.budget_mwh) {
            lo = hi;
        } else {
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (planned(mid) <= plan.budget_mwh ? lo : hi) = mid;
            }
        }
    }
    for (std::size_t i = 0; i < base.size(); ++i)
        plan.active_fraction[i] = std::min(cap[i], lo * base[i]);
    plan.planned_mwh = planned(lo);
    return plan;
}

} // namespace openhealth
