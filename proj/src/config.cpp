#include "openhealth/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace openhealth {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems)
        out += "\n  " + p;
    return out;
}

// Walks one JSON object, reporting unknown keys and type/range problems
// under a dotted path.
class Section {
  public:
    Section(const json* obj, std::string path, std::vector<std::string>& problems)
        : obj_(obj), path_(std::move(path)), problems_(problems) {}

    static Section child(const json& parent, const std::string& parent_path, const char* key,
                         std::vector<std::string>& problems) {
        const std::string path = parent_path.empty() ? key : parent_path + "." + key;
        const auto it = parent.find(key);
        if (it == parent.end())
            return Section(nullptr, path, problems);
        if (!it->is_object()) {
            problems.push_back(path + ": expected an object");
            return Section(nullptr, path, problems);
        }
        return Section(&*it, path, problems);
    }

    bool present() const { return obj_ != nullptr; }
    const json* raw() const { return obj_; }
    const std::string& path() const { return path_; }

    void allow(std::initializer_list<const char*> keys) {
        if (!obj_)
            return;
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : obj_->items())
            if (!allowed.contains(k))
                problems_.push_back(fmt::format("{}: unknown key \"{}\"", path_, k));
    }

    const json* get(const char* key) const {
        if (!obj_)
            return nullptr;
        const auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    std::string at(const char* key) const { return path_ + "." + key; }

    void fail(const char* key, const std::string& msg) { problems_.push_back(at(key) + ": " + msg); }

    void number(const char* key, double& out, std::function<bool(double)> ok = {}, const char* range = "") {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_number()) {
            fail(key, "expected a number");
            return;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d) || (ok && !ok(d))) {
            fail(key, fmt::format("value {} out of range {}", d, range));
            return;
        }
        out = d;
    }

    template <class Int>
    void integer(const char* key, Int& out, long long lo, long long hi) {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
            return;
        }
        const long long x = v->get<long long>();
        if (x < lo || x > hi) {
            fail(key, fmt::format("value {} out of range [{}, {}]", x, lo, hi));
            return;
        }
        out = static_cast<Int>(x);
    }

    void boolean(const char* key, bool& out) {
        const json* v = get(key);
        if (!v)
            return;
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
            return;
        }
        out = v->get<bool>();
    }

    std::optional<std::string> string(const char* key) {
        const json* v = get(key);
        if (!v || v->is_null())
            return std::nullopt;
        if (!v->is_string()) {
            fail(key, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

  private:
    const json* obj_;
    std::string path_;
    std::vector<std::string>& problems_;
};

const auto positive = [](double x) { return x > 0; };
const auto nonnegative = [](double x) { return x >= 0; };
const auto unit_open_closed = [](double x) { return x > 0 && x <= 1; };

constexpr long long kI64Max = std::numeric_limits<std::int64_t>::max() / 4;

std::vector<ScheduleEntry> corpus_schedule(const CorpusSpec& c) {
    std::vector<Label> labels;
    for (const auto& [label, sig] : c.model.classes)
        if (label != Label{ActivityLabel::Transition})
            labels.push_back(label);
    return cyclic_schedule(labels, c.segment_ms, c.transition_ms, c.repeats);
}

json signal_to_json(const ClassSignal& s) {
    return json{{"gravity", {s.gravity[0], s.gravity[1], s.gravity[2]}},
                {"freq_hz", s.freq_hz},
                {"amplitude_g", s.amplitude_g},
                {"gyro_amplitude_dps", s.gyro_amplitude_dps},
                {"accel_noise_g", s.accel_noise_g},
                {"gyro_noise_dps", s.gyro_noise_dps},
                {"stretch_base", s.stretch_base},
                {"stretch_amplitude", s.stretch_amplitude},
                {"stretch_noise", s.stretch_noise}};
}

void parse_signal(Section s, ClassSignal& sig) {
    s.allow({"gravity", "freq_hz", "amplitude_g", "gyro_amplitude_dps", "accel_noise_g", "gyro_noise_dps",
             "stretch_base", "stretch_amplitude", "stretch_noise"});
    if (const json* g = s.get("gravity")) {
        if (!g->is_array() || g->size() != 3 || !std::all_of(g->begin(), g->end(), [](const json& x) {
                return x.is_number();
            }))
            s.fail("gravity", "expected an array of three numbers");
        else
            sig.gravity = {(*g)[0].get<double>(), (*g)[1].get<double>(), (*g)[2].get<double>()};
    }
    s.number("freq_hz", sig.freq_hz, nonnegative, ">= 0");
    s.number("amplitude_g", sig.amplitude_g, [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
    s.number("gyro_amplitude_dps", sig.gyro_amplitude_dps, nonnegative, ">= 0");
    s.number("accel_noise_g", sig.accel_noise_g, nonnegative, ">= 0");
    s.number("gyro_noise_dps", sig.gyro_noise_dps, nonnegative, ">= 0");
    s.number("stretch_base", sig.stretch_base, [](double x) { return x >= 0 && x <= 1; }, "[0, 1]");
    s.number("stretch_amplitude", sig.stretch_amplitude, nonnegative, ">= 0");
    s.number("stretch_noise", sig.stretch_noise, nonnegative, ">= 0");
}

void parse_corpus(Section s, CorpusSpec& c, AppKind app, std::vector<std::string>& problems) {
    if (!s.present())
        return;
    s.allow({"seed", "with_stretch", "segment_ms", "transition_ms", "repeats", "classes"});
    s.integer("seed", c.model.seed, 0, kI64Max);
    s.boolean("with_stretch", c.model.with_stretch);
    s.integer("segment_ms", c.segment_ms, 1, kI64Max);
    s.integer("transition_ms", c.transition_ms, 0, kI64Max);
    s.integer("repeats", c.repeats, 1, 100000);
    if (app == AppKind::Gesture && c.model.with_stretch)
        s.fail("with_stretch", "the gesture corpus has no stretch sensor");
    if (app == AppKind::Gesture && c.transition_ms > 0)
        s.fail("transition_ms", "gesture corpora have no transition class");
    auto classes = Section::child(*s.raw(), s.path(), "classes", problems);
    if (classes.present()) {
        for (const auto& [name, value] : classes.raw()->items()) {
            const auto label = parse_label(name);
            if (!label || app_of(*label) != app) {
                problems.push_back(fmt::format("{}: unknown key \"{}\"", classes.path(), name));
                continue;
            }
            auto sig_section = Section::child(*classes.raw(), classes.path(), name.c_str(), problems);
            if (!sig_section.present())
                continue;
            ClassSignal sig = c.model.classes.contains(*label) ? c.model.classes.at(*label) : ClassSignal{};
            parse_signal(sig_section, sig);
            c.model.classes[*label] = sig;
        }
    }
    try {
        validate_model(c.model);
    } catch (const std::exception& e) {
        problems.push_back(s.path() + ": " + e.what());
    }
}

void parse_harvest(Section s, HarvestProfile& profile, std::vector<std::string>& problems) {
    if (!s.present())
        return;
    s.allow({"daylight", "slots_mw"});
    const json* slots = s.get("slots_mw");
    auto daylight = Section::child(*s.raw(), s.path(), "daylight", problems);
    if (slots && daylight.present()) {
        problems.push_back(s.path() + ": give either daylight or slots_mw, not both");
        return;
    }
    if (slots) {
        if (!slots->is_array() || slots->size() != kSlotsPerDay ||
            !std::all_of(slots->begin(), slots->end(), [](const json& x) { return x.is_number() && x.get<double>() >= 0; }))
            s.fail("slots_mw", "expected 24 nonnegative numbers");
        else
            for (std::size_t i = 0; i < kSlotsPerDay; ++i)
                profile.slot_mw[i] = (*slots)[i].get<double>();
    }
    if (daylight.present()) {
        daylight.allow({"peak_mw", "sunrise_hour", "sunset_hour", "floor_mw"});
        double peak = 6.0, floor = 0.0;
        int sunrise = 6, sunset = 18;
        daylight.number("peak_mw", peak, nonnegative, ">= 0");
        daylight.number("floor_mw", floor, nonnegative, ">= 0");
        daylight.integer("sunrise_hour", sunrise, 0, 23);
        daylight.integer("sunset_hour", sunset, 1, 24);
        if (sunrise >= sunset)
            problems.push_back(daylight.path() + ": sunrise_hour must be before sunset_hour");
        else
            profile = daylight_profile(peak, sunrise, sunset, floor);
    }
}

std::vector<Label> parse_label_list(Section& s, const char* key) {
    std::vector<Label> out;
    const json* v = s.get(key);
    if (!v)
        return out;
    if (!v->is_array()) {
        s.fail(key, "expected an array of label names");
        return out;
    }
    for (const auto& item : *v) {
        const auto label = item.is_string() ? parse_label(item.get<std::string>()) : std::nullopt;
        if (!label)
            s.fail(key, "unknown label " + item.dump());
        else
            out.push_back(*label);
    }
    return out;
}

void parse_device(const json& item, const std::string& path, DeviceSpec& d, const std::filesystem::path& base,
                  std::vector<std::string>& problems) {
    if (!item.is_object()) {
        problems.push_back(path + ": expected an object");
        return;
    }
    Section s(&item, path, problems);
    s.allow({"id", "app", "clock_skew_ms", "episodes", "recording"});
    if (!s.get("id"))
        s.fail("id", "required");
    s.integer("id", d.id, 0, 65535);
    if (auto app = s.string("app")) {
        if (auto a = parse_app(*app))
            d.app = *a;
        else
            s.fail("app", "expected \"har\" or \"gesture\"");
    }
    s.integer("clock_skew_ms", d.clock_skew_ms, -kMsPerDay, kMsPerDay);
    if (auto rec = s.string("recording")) {
        std::filesystem::path p(*rec);
        d.recording = p.is_absolute() || base.empty() ? p : base / p;
    }
    if (const json* eps = s.get("episodes")) {
        if (!eps->is_array()) {
            s.fail("episodes", "expected an array");
            return;
        }
        std::size_t i = 0;
        for (const auto& e : *eps) {
            const std::string ep = fmt::format("{}.episodes[{}]", path, i++);
            if (!e.is_object()) {
                problems.push_back(ep + ": expected an object");
                continue;
            }
            Section es(&e, ep, problems);
            es.allow({"start", "duration_ms", "label"});
            Episode episode;
            const auto start = es.string("start");
            const auto parsed = start ? parse_time_of_day(*start) : std::nullopt;
            if (!parsed)
                es.fail("start", "expected a time of day \"HH:MM\"");
            else
                episode.start_ms = *parsed;
            if (!es.get("duration_ms"))
                es.fail("duration_ms", "required");
            es.integer("duration_ms", episode.duration_ms, 1, kMsPerDay);
            const auto name = es.string("label");
            const auto label = name ? parse_label(*name) : std::nullopt;
            if (!label)
                es.fail("label", "expected a label name");
            else if (app_of(*label) != d.app)
                es.fail("label", fmt::format("label {} does not belong to app {}", *name, app_name(d.app)));
            else
                episode.label = *label;
            d.episodes.push_back(episode);
        }
    }
    if (d.recording && s.get("episodes"))
        problems.push_back(path + ": give either episodes or recording, not both");
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<ScheduleEntry> CorpusSpec::schedule() const { return corpus_schedule(*this); }

std::optional<std::int64_t> parse_time_of_day(std::string_view text) {
    int h = 0, m = 0, sec = 0;
    char tail = 0;
    const std::string s(text);
    const int n = std::sscanf(s.c_str(), "%2d:%2d:%2d%c", &h, &m, &sec, &tail);
    if (n == 2) {
        if (s.size() != 5)
            return std::nullopt;
        sec = 0;
    } else if (n != 3 || s.size() != 8) {
        return std::nullopt;
    }
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59)
        return std::nullopt;
    return ((h * 60 + m) * 60 + sec) * std::int64_t{1000};
}

std::string format_time_of_day(std::int64_t ms) {
    const auto s = ms / 1000;
    if (s % 60 == 0)
        return fmt::format("{:02}:{:02}", s / 3600, (s / 60) % 60);
    return fmt::format("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60);
}

Config default_config() {
    Config c;
    c.synthetic.har = {default_har_model(7), 60'000, 8'000, 5};
    c.synthetic.gesture = {default_gesture_model(7), 20'000, 0, 6};
    c.channel = {5, 25, 0.02, 0.005};
    c.protocol.key = key_from_hex("000102030405060708090a0b0c0d0e0f");
    c.protocol.alert.alert_labels = {ActivityLabel::Jump};

    auto at = [](const char* hhmm) { return *parse_time_of_day(hhmm); };
    DeviceSpec har;
    har.id = 1;
    har.app = AppKind::Har;
    har.clock_skew_ms = 500;
    har.episodes = {{at("07:30"), 20 * 60'000, ActivityLabel::Walk}, {at("09:00"), 30 * 60'000, ActivityLabel::Sit},
                    {at("12:15"), 15 * 60'000, ActivityLabel::Walk}, {at("15:00"), 2 * 60'000, ActivityLabel::Jump},
                    {at("15:02"), 10 * 60'000, ActivityLabel::Stand}, {at("17:30"), 20 * 60'000, ActivityLabel::Drive},
                    {at("21:00"), 30 * 60'000, ActivityLabel::LieDown}};
    DeviceSpec gesture;
    gesture.id = 2;
    gesture.app = AppKind::Gesture;
    gesture.clock_skew_ms = -250;
    gesture.episodes = {{at("10:00"), 2 * 60'000, GestureLabel::Up},   {at("10:02"), 2 * 60'000, GestureLabel::Down},
                        {at("10:04"), 2 * 60'000, GestureLabel::Left}, {at("10:06"), 2 * 60'000, GestureLabel::Right},
                        {at("16:00"), 2 * 60'000, GestureLabel::Right}, {at("16:02"), 2 * 60'000, GestureLabel::Up}};
    c.scenario.devices = {har, gesture};
    return c;
}

Config parse_config(const json& doc, const std::filesystem::path& base) {
    std::vector<std::string> problems;
    Config c = default_config();
    if (!doc.is_object())
        throw ConfigError({"configuration root must be a JSON object"});

    Section root(&doc, "", problems);
    root.allow({"device_profile", "pipeline", "train", "synthetic_models", "energy", "channel", "protocol",
                "scenario"});

    if (auto s = Section::child(doc, "", "device_profile", problems); s.present()) {
        s.allow({"cpu_mhz", "sram_bytes", "flash_bytes", "p_active_har_mw", "p_active_gesture_mw", "p_sleep_mw",
                 "p_tx_mw", "sample_rate_hz"});
        s.integer("cpu_mhz", c.device.cpu_mhz, 1, 100000);
        s.integer("sram_bytes", c.device.sram_bytes, 1, kI64Max);
        s.integer("flash_bytes", c.device.flash_bytes, 1, kI64Max);
        s.number("p_active_har_mw", c.device.p_active_har_mw, positive, "> 0");
        s.number("p_active_gesture_mw", c.device.p_active_gesture_mw, positive, "> 0");
        s.number("p_sleep_mw", c.device.p_sleep_mw, positive, "> 0");
        s.number("p_tx_mw", c.device.p_tx_mw, positive, "> 0");
        s.number("sample_rate_hz", c.device.sample_rate_hz, [](double x) { return x > 0 && x <= 1000; },
                 "(0, 1000]");
    }

    if (auto s = Section::child(doc, "", "pipeline", problems); s.present()) {
        s.allow({"window", "overlap", "hidden_units", "channels"});
        s.integer("window", c.pipeline.window, 2, 1 << 20);
        s.number("overlap", c.pipeline.overlap, [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
        s.integer("hidden_units", c.pipeline.hidden_units, 1, 4096);
        if (const json* ch = s.get("channels"); ch && !ch->is_null()) {
            std::vector<Channel> channels;
            if (!ch->is_array() || ch->empty()) {
                s.fail("channels", "expected a nonempty array of channel names");
            } else {
                for (const auto& item : *ch) {
                    const auto parsed = item.is_string() ? parse_channel(item.get<std::string>()) : std::nullopt;
                    if (!parsed)
                        s.fail("channels", "unknown channel " + item.dump());
                    else if (std::find(channels.begin(), channels.end(), *parsed) != channels.end())
                        s.fail("channels", "duplicate channel " + item.dump());
                    else
                        channels.push_back(*parsed);
                }
                c.channels = channels;
            }
        }
    }

    if (auto s = Section::child(doc, "", "train", problems); s.present()) {
        s.allow({"learning_rate", "momentum", "epochs", "batch_size", "seed", "train_fraction", "patience"});
        s.number("learning_rate", c.train.learning_rate, positive, "> 0");
        s.number("momentum", c.train.momentum, [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
        s.integer("epochs", c.train.epochs, 1, 1'000'000);
        s.integer("batch_size", c.train.batch_size, 1, 1'000'000);
        s.integer("seed", c.train.seed, 0, kI64Max);
        s.number("train_fraction", c.train.split_fraction, [](double x) { return x > 0 && x < 1; }, "(0, 1)");
        if (const json* p = s.get("patience"); p && !p->is_null()) {
            int patience = 0;
            s.integer("patience", patience, 1, 1'000'000);
            c.train.patience = patience;
        }
    }

    if (auto s = Section::child(doc, "", "synthetic_models", problems); s.present()) {
        s.allow({"har", "gesture"});
        parse_corpus(Section::child(doc["synthetic_models"], s.path(), "har", problems), c.synthetic.har,
                     AppKind::Har, problems);
        parse_corpus(Section::child(doc["synthetic_models"], s.path(), "gesture", problems), c.synthetic.gesture,
                     AppKind::Gesture, problems);
    }

    if (auto s = Section::child(doc, "", "energy", problems); s.present()) {
        s.allow({"battery_mwh", "capacity_mwh", "mppt_efficiency", "charge_efficiency", "discharge_efficiency",
                 "reserve_fraction", "spend_battery_surplus", "harvest"});
        auto& b = c.energy.battery;
        s.number("battery_mwh", b.battery_mwh, nonnegative, ">= 0");
        s.number("capacity_mwh", b.capacity_mwh, positive, "> 0");
        s.number("mppt_efficiency", b.mppt_efficiency, unit_open_closed, "(0, 1]");
        s.number("charge_efficiency", b.charge_efficiency, unit_open_closed, "(0, 1]");
        s.number("discharge_efficiency", b.discharge_efficiency, unit_open_closed, "(0, 1]");
        s.number("reserve_fraction", c.energy.plan.reserve_fraction, [](double x) { return x >= 0 && x <= 1; },
                 "[0, 1]");
        s.boolean("spend_battery_surplus", c.energy.plan.spend_battery_surplus);
        if (b.battery_mwh > b.capacity_mwh)
            s.fail("battery_mwh", "exceeds capacity_mwh");
        parse_harvest(Section::child(doc["energy"], s.path(), "harvest", problems), c.energy.harvest, problems);
    }

    if (auto s = Section::child(doc, "", "channel", problems); s.present()) {
        s.allow({"latency_min_ms", "latency_max_ms", "loss_probability", "corruption_probability"});
        s.integer("latency_min_ms", c.channel.latency_min_ms, 0, kMsPerHour);
        s.integer("latency_max_ms", c.channel.latency_max_ms, 0, kMsPerHour);
        s.number("loss_probability", c.channel.loss_probability, [](double x) { return x >= 0 && x <= 1; },
                 "[0, 1]");
        s.number("corruption_probability", c.channel.corruption_probability,
                 [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
        if (c.channel.latency_max_ms < c.channel.latency_min_ms)
            s.fail("latency_max_ms", "must be >= latency_min_ms");
    }

    if (auto s = Section::child(doc, "", "protocol", problems); s.present()) {
        s.allow({"key_hex", "retry_interval_ms", "max_attempts", "alert_labels", "alert_cooldown_ms",
                 "replay_window", "sync_interval_ms", "sync_timeout_ms", "sync_retries"});
        if (auto hex = s.string("key_hex")) {
            try {
                c.protocol.key = key_from_hex(*hex);
            } catch (const std::exception& e) {
                s.fail("key_hex", e.what());
            }
        }
        s.integer("retry_interval_ms", c.protocol.alert.retry_interval_ms, 1, kMsPerHour);
        s.integer("max_attempts", c.protocol.alert.max_attempts, 1, 1000);
        if (s.get("alert_labels"))
            c.protocol.alert.alert_labels = parse_label_list(s, "alert_labels");
        s.integer("alert_cooldown_ms", c.protocol.alert_cooldown_ms, 0, kI64Max);
        s.integer("replay_window", c.protocol.replay_window, 0, ReplayWindow::kMaxWidth);
        s.integer("sync_interval_ms", c.protocol.sync_interval_ms, 1000, kI64Max);
        s.integer("sync_timeout_ms", c.protocol.sync.reply_timeout_ms, 1, kMsPerHour);
        s.integer("sync_retries", c.protocol.sync.max_retries, 0, 100);
    }

    if (auto s = Section::child(doc, "", "scenario", problems); s.present()) {
        s.allow({"duration_ms", "har_model", "gesture_model", "motion_poll_ms", "motion_poll_samples",
                 "motion_threshold_g", "idle_windows", "processing_ms", "tx_ms", "inject_canary", "devices"});
        auto& sc = c.scenario;
        s.integer("duration_ms", sc.duration_ms, 1, 366 * kMsPerDay);
        auto resolve = [&](const char* key, std::optional<std::filesystem::path>& out) {
            if (auto p = s.string(key)) {
                std::filesystem::path path(*p);
                out = path.is_absolute() || base.empty() ? path : base / path;
            }
        };
        resolve("har_model", sc.har_model);
        resolve("gesture_model", sc.gesture_model);
        s.integer("motion_poll_ms", sc.motion_poll_ms, 1, kMsPerHour);
        s.integer("motion_poll_samples", sc.motion_poll_samples, 2, 100000);
        s.number("motion_threshold_g", sc.motion_threshold_g, nonnegative, ">= 0");
        s.integer("idle_windows", sc.idle_windows, 1, 100000);
        s.integer("processing_ms", sc.processing_ms, 1, kMsPerHour);
        s.integer("tx_ms", sc.tx_ms, 1, kMsPerHour);
        s.boolean("inject_canary", sc.inject_canary);
        if (const json* devs = s.get("devices")) {
            sc.devices.clear();
            if (!devs->is_array()) {
                s.fail("devices", "expected an array");
            } else {
                std::set<std::uint16_t> ids;
                for (std::size_t i = 0; i < devs->size(); ++i) {
                    DeviceSpec d;
                    parse_device((*devs)[i], fmt::format("{}[{}]", s.at("devices"), i), d, base, problems);
                    if (!ids.insert(d.id).second)
                        problems.push_back(fmt::format("{}[{}].id: duplicate device id {}", s.at("devices"), i, d.id));
                    sc.devices.push_back(std::move(d));
                }
            }
        }
    }

    // Cross-section checks.
    if (c.channels) {
        for (Channel ch : *c.channels)
            if (ch == Channel::Stretch && !c.synthetic.har.model.with_stretch)
                problems.push_back("pipeline.channels: stretch selected but the HAR corpus has no stretch sensor");
    }
    const double cycle_window_ms = 1000.0 * static_cast<double>(c.pipeline.window) / c.device.sample_rate_hz;
    if (cycle_window_ms + static_cast<double>(c.scenario.processing_ms + c.scenario.tx_ms) >
        static_cast<double>(kMsPerHour))
        problems.push_back("pipeline.window: one sampling cycle must fit within an hour");

    if (!problems.empty())
        throw ConfigError(problems);
    return c;
}

Config parse_config_text(const std::string& text, const std::filesystem::path& base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    return parse_config(doc, base);
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError({"cannot open configuration file " + path.string()});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.parent_path());
}

json config_to_json(const Config& c) {
    json j;
    j["device_profile"] = {{"cpu_mhz", c.device.cpu_mhz},
                           {"sram_bytes", c.device.sram_bytes},
                           {"flash_bytes", c.device.flash_bytes},
                           {"p_active_har_mw", c.device.p_active_har_mw},
                           {"p_active_gesture_mw", c.device.p_active_gesture_mw},
                           {"p_sleep_mw", c.device.p_sleep_mw},
                           {"p_tx_mw", c.device.p_tx_mw},
                           {"sample_rate_hz", c.device.sample_rate_hz}};
    j["pipeline"] = {{"window", c.pipeline.window},
                     {"overlap", c.pipeline.overlap},
                     {"hidden_units", c.pipeline.hidden_units},
                     {"channels", nullptr}};
    if (c.channels) {
        json arr = json::array();
        for (Channel ch : *c.channels)
            arr.push_back(std::string(channel_name(ch)));
        j["pipeline"]["channels"] = arr;
    }
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"momentum", c.train.momentum},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"seed", c.train.seed},
                  {"train_fraction", c.train.split_fraction},
                  {"patience", c.train.patience ? json(*c.train.patience) : json(nullptr)}};
    auto corpus = [](const CorpusSpec& cs) {
        json classes = json::object();
        for (const auto& [label, sig] : cs.model.classes)
            classes[std::string(label_name(label))] = signal_to_json(sig);
        return json{{"seed", cs.model.seed},
                    {"with_stretch", cs.model.with_stretch},
                    {"segment_ms", cs.segment_ms},
                    {"transition_ms", cs.transition_ms},
                    {"repeats", cs.repeats},
                    {"classes", classes}};
    };
    j["synthetic_models"] = {{"har", corpus(c.synthetic.har)}, {"gesture", corpus(c.synthetic.gesture)}};
    j["energy"] = {{"battery_mwh", c.energy.battery.battery_mwh},
                   {"capacity_mwh", c.energy.battery.capacity_mwh},
                   {"mppt_efficiency", c.energy.battery.mppt_efficiency},
                   {"charge_efficiency", c.energy.battery.charge_efficiency},
                   {"discharge_efficiency", c.energy.battery.discharge_efficiency},
                   {"reserve_fraction", c.energy.plan.reserve_fraction},
                   {"spend_battery_surplus", c.energy.plan.spend_battery_surplus},
                   {"harvest", {{"slots_mw", c.energy.harvest.slot_mw}}}};
    j["channel"] = {{"latency_min_ms", c.channel.latency_min_ms},
                    {"latency_max_ms", c.channel.latency_max_ms},
                    {"loss_probability", c.channel.loss_probability},
                    {"corruption_probability", c.channel.corruption_probability}};
    json alert_labels = json::array();
    for (const auto& l : c.protocol.alert.alert_labels)
        alert_labels.push_back(std::string(label_name(l)));
    j["protocol"] = {{"key_hex", to_hex(c.protocol.key)},
                     {"retry_interval_ms", c.protocol.alert.retry_interval_ms},
                     {"max_attempts", c.protocol.alert.max_attempts},
                     {"alert_labels", alert_labels},
                     {"alert_cooldown_ms", c.protocol.alert_cooldown_ms},
                     {"replay_window", c.protocol.replay_window},
                     {"sync_interval_ms", c.protocol.sync_interval_ms},
                     {"sync_timeout_ms", c.protocol.sync.reply_timeout_ms},
                     {"sync_retries", c.protocol.sync.max_retries}};
    json devices = json::array();
    for (const auto& d : c.scenario.devices) {
        json dj = {{"id", d.id}, {"app", std::string(app_name(d.app))}, {"clock_skew_ms", d.clock_skew_ms}};
        if (d.recording) {
            dj["recording"] = d.recording->string();
        } else {
            json eps = json::array();
            for (const auto& e : d.episodes)
                eps.push_back({{"start", format_time_of_day(e.start_ms)},
                               {"duration_ms", e.duration_ms},
                               {"label", std::string(label_name(e.label))}});
            dj["episodes"] = eps;
        }
        devices.push_back(dj);
    }
    auto opt_path = [](const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); };
    j["scenario"] = {{"duration_ms", c.scenario.duration_ms},
                     {"har_model", opt_path(c.scenario.har_model)},
                     {"gesture_model", opt_path(c.scenario.gesture_model)},
                     {"motion_poll_ms", c.scenario.motion_poll_ms},
                     {"motion_poll_samples", c.scenario.motion_poll_samples},
                     {"motion_threshold_g", c.scenario.motion_threshold_g},
                     {"idle_windows", c.scenario.idle_windows},
                     {"processing_ms", c.scenario.processing_ms},
                     {"tx_ms", c.scenario.tx_ms},
                     {"inject_canary", c.scenario.inject_canary},
                     {"devices", devices}};
    return j;
}

} // namespace openhealth
