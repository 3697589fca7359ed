#include <doctest.h>

#include <algorithm>

#include "openhealth/config.hpp"
#include "openhealth/sim.hpp"
#include "openhealth/trace.hpp"

using namespace openhealth;

namespace {

// One HAR device walking for the first simulated hour, with harvest above
// the largest state power so energy never limits activity.
Config walking_hour() {
    Config c = default_config();
    c.train.epochs = 40;
    c.scenario.duration_ms = kMsPerHour;
    DeviceSpec d;
    d.id = 1;
    d.app = AppKind::Har;
    d.episodes = {{0, kMsPerHour, ActivityLabel::Walk}};
    c.scenario.devices = {d};
    c.channel = {10, 10, 0.0, 0.0};
    c.energy.harvest.slot_mw.fill(20.0);
    return c;
}

const ScenarioModels& models() {
    static const ScenarioModels m = prepare_models(walking_hour());
    return m;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

} // namespace

TEST_CASE("lossless walking hour delivers every frame") {
    const auto t = run_scenario(walking_hour(), 5, models());
    const auto& dev = t.metrics["devices"]["1"];
    CHECK(dev["frames_sent"].get<int>() > 100);
    CHECK(dev["frames_received"] == dev["frames_sent"]);
    CHECK(dev["frames_rejected"] == 0);
    CHECK(dev["frames_lost"] == 0);
    CHECK(dev["downlink"]["received"] == dev["downlink"]["sent"]);
    CHECK(dev["inferences"].get<int>() > 100);
    const int data = dev["sent_by_type"].value("DATA", 0);
    const int alerts = dev["alerts_raised"].get<int>();
    CHECK(data > 0);
    // every DATA frame and every alert is stored by the host exactly once
    CHECK(count_lines(t.observations_csv) - 1 == static_cast<std::size_t>(data + alerts));
    CHECK(t.metrics == compute_metrics(t.text));
    CHECK(replay(t.text).passed);
}

TEST_CASE("same config and seed give byte-identical traces") {
    const auto a = run_scenario(walking_hour(), 77, models());
    const auto b = run_scenario(walking_hour(), 77, models());
    CHECK(a.text == b.text);
    CHECK(a.observations_csv == b.observations_csv);
    const auto c = run_scenario(walking_hour(), 78, models());
    CHECK(a.text != c.text);
}

TEST_CASE("harvest above consumption never lowers the battery") {
    const auto t = run_scenario(walking_hour(), 9, models());
    const auto& dev = t.metrics["devices"]["1"];
    CHECK(dev["battery_end_mwh"].get<double>() >= dev["battery_start_mwh"].get<double>());
    // energy ledger oracle: start plus the sum of applied deltas, bounded by capacity
    double battery = dev["battery_start_mwh"].get<double>();
    for (const auto& line : parse_trace(t.text).events)
        if (line.kind == "energy" && line.entity == "dev:1") {
            CHECK(line.number("before") == doctest::Approx(battery).epsilon(1e-9));
            battery = std::clamp(battery + line.number("applied"), 0.0, dev["capacity_mwh"].get<double>());
        }
    CHECK(battery == doctest::Approx(dev["battery_end_mwh"].get<double>()).epsilon(1e-9));
}

TEST_CASE("lossy channel accounts for every uplink frame") {
    auto c = walking_hour();
    c.channel = {5, 40, 0.2, 0.05};
    const auto t = run_scenario(c, 3, models());
    const auto& dev = t.metrics["devices"]["1"];
    CHECK(dev["frames_lost"].get<int>() > 0);
    CHECK(dev["frames_rejected"].get<int>() > 0);
    CHECK(dev["frames_received"].get<int>() + dev["frames_lost"].get<int>() + dev["frames_rejected"].get<int>() ==
          dev["frames_sent"].get<int>());
    const auto report = replay(t.text);
    CHECK(report.passed);
    for (const auto& f : report.failures)
        MESSAGE(f.check << " line " << f.line << ": " << f.message);
}

TEST_CASE("a depleted device recovers only after recharging") {
    auto c = walking_hour();
    c.scenario.duration_ms = 3 * kMsPerHour;
    c.scenario.devices[0].episodes = {{0, 3 * kMsPerHour, ActivityLabel::Walk}};
    // sleep power alone empties 0.2 mWh within the dark first hour
    c.energy.battery.battery_mwh = 0.2;
    c.energy.harvest.slot_mw.fill(0.0);
    c.energy.harvest.slot_mw[1] = 200.0; // recharge during the second hour
    c.energy.plan.spend_battery_surplus = true;
    c.energy.plan.reserve_fraction = 0.0;
    const auto t = run_scenario(c, 1, models());
    const auto& dev = t.metrics["devices"]["1"];
    CHECK(dev["depletions"].get<int>() >= 1);
    CHECK(t.text.find("\tdepleted\t") != std::string::npos);
    CHECK(t.text.find("\trecovered\t") != std::string::npos);
    CHECK(replay(t.text).passed);
}

TEST_CASE("trace header and end line") {
    const auto t = run_scenario(walking_hour(), 12, models());
    CHECK(t.text.starts_with("#openhealth-trace\tv1\n#seed\t12\n#canary\t"));
    const auto parsed = parse_trace(t.text);
    REQUIRE_FALSE(parsed.events.empty());
    CHECK(parsed.events.back().kind == "end");
    CHECK(parsed.events.back().integer("duration") == kMsPerHour);
    for (std::size_t i = 1; i < parsed.events.size(); ++i)
        CHECK(parsed.events[i - 1].t_ms <= parsed.events[i].t_ms);
}

TEST_CASE("invalid scenarios are rejected before running") {
    auto c = walking_hour();
    c.scenario.devices.push_back(c.scenario.devices.front()); // duplicate id
    CHECK_THROWS(run_scenario(c, 1, models()));
}
