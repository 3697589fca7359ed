#pragma once

// JSON configuration document shared by every command. All sections are
// optional and fall back to the defaults below; unknown keys, wrong types and
// out-of-range values are all collected before failing.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "openhealth/alert.hpp"
#include "openhealth/channel.hpp"
#include "openhealth/core.hpp"
#include "openhealth/energy.hpp"
#include "openhealth/experiment.hpp"
#include "openhealth/mlp.hpp"
#include "openhealth/pipeline.hpp"
#include "openhealth/sync.hpp"
#include "openhealth/synthetic.hpp"

namespace openhealth {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

  private:
    std::vector<std::string> problems_;
};

struct CorpusSpec {
    SyntheticActivityModel model;
    std::int64_t segment_ms = 0;
    std::int64_t transition_ms = 0;
    int repeats = 0;

    std::vector<ScheduleEntry> schedule() const;
};

struct SyntheticConfig {
    CorpusSpec har;
    CorpusSpec gesture;

    const CorpusSpec& for_app(AppKind app) const { return app == AppKind::Har ? har : gesture; }
};

struct EnergyConfig {
    EnergyState battery;
    PlanOptions plan{0.2, false};
    HarvestProfile harvest = daylight_profile(6.0, 6, 18, 0.4);
};

struct ProtocolConfig {
    Key key{};
    AlertPolicy alert;
    std::int64_t alert_cooldown_ms = 60'000;
    std::uint32_t replay_window = ReplayWindow::kMaxWidth;
    SyncPolicy sync;
    std::int64_t sync_interval_ms = 6 * kMsPerHour;
};

// A daily repeating activity period, in host time of day.
struct Episode {
    std::int64_t start_ms = 0; // since midnight
    std::int64_t duration_ms = 0;
    Label label = ActivityLabel::Walk;
};

struct DeviceSpec {
    std::uint16_t id = 1;
    AppKind app = AppKind::Har;
    std::int64_t clock_skew_ms = 0; // device clock minus host clock
    std::vector<Episode> episodes;
    std::optional<std::filesystem::path> recording; // replaces episodes
};

struct ScenarioConfig {
    std::int64_t duration_ms = 7 * kMsPerDay;
    std::optional<std::filesystem::path> har_model;
    std::optional<std::filesystem::path> gesture_model;
    std::int64_t motion_poll_ms = 1000;
    std::size_t motion_poll_samples = 8;
    double motion_threshold_g = kDefaultMotionThresholdG;
    int idle_windows = 1;
    std::int64_t processing_ms = 10;
    std::int64_t tx_ms = 5;
    bool inject_canary = true;
    std::vector<DeviceSpec> devices;
};

struct Config {
    DeviceProfile device;
    PipelineConfig pipeline;
    std::optional<std::vector<Channel>> channels; // all available when unset
    TrainConfig train;
    SyntheticConfig synthetic;
    EnergyConfig energy;
    ChannelModel channel;
    ProtocolConfig protocol;
    ScenarioConfig scenario;
};

// The reference configuration (also shipped as configs/reference.json).
Config default_config();

// Relative recording/model paths resolve against base_dir.
Config parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Config parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
// Throws ConfigError when the file is missing or unreadable too.
Config load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const Config& config);

// "HH:MM" or "HH:MM:SS" -> ms since midnight.
std::optional<std::int64_t> parse_time_of_day(std::string_view text);
std::string format_time_of_day(std::int64_t ms);

} // namespace openhealth
