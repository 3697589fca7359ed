#include "openhealth/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

#include "openhealth/dataset.hpp"
#include "openhealth/experiment.hpp"
#include "openhealth/firmware.hpp"
#include "openhealth/host.hpp"
#include "openhealth/model_io.hpp"
#include "openhealth/rng.hpp"
#include "openhealth/session.hpp"
#include "openhealth/trace.hpp"

namespace openhealth {

namespace {

constexpr Vec3 kCanaryAccel{1.234567, -0.987654, 0.456789};

ScenarioModel deploy(const MlpModel& trained, std::string source) {
    const auto q = quantize(trained);
    return {dequantize(q), std::move(source), flash_bytes(q), std::nullopt};
}

ScenarioModel train_for(const Config& config, AppKind app) {
    const auto& corpus = config.synthetic.for_app(app);
    const auto rec = generate_synthetic(corpus.model, corpus.schedule(), config.device.sample_rate_hz);
    const auto data = featurize(rec, config.pipeline);
    std::vector<Channel> channels;
    if (config.channels)
        for (Channel c : *config.channels)
            if (c != Channel::Stretch || data.with_stretch)
                channels.push_back(c);
    const auto result = channels.empty() ? run_experiment(data, config.pipeline, config.train)
                                         : run_experiment(data, config.pipeline, config.train, channels);
    auto m = deploy(result.trained.model, "trained");
    if (result.report.total > 0)
        m.test_accuracy_pct = 100.0 * static_cast<double>(result.report.correct) / static_cast<double>(result.report.total);
    return m;
}

enum class Ev : std::uint8_t {
    MotionPoll,
    WindowFull,
    InferenceDone,
    TxDone,
    HostRx,
    DeviceRx,
    AlertTimer,
    AlertFire,
    SyncStart,
    SyncTimeout,
    EnergyTick,
};

struct Event {
    std::int64_t t = 0;
    std::uint64_t order = 0;
    Ev kind = Ev::EnergyTick;
    std::size_t dev = 0;
    std::uint64_t epoch = 0;
    std::uint64_t arg = 0;
    std::uint64_t tx = 0;
    std::vector<std::uint8_t> bytes;
};

Event at(std::int64_t t, Ev kind, std::size_t dev = 0, std::uint64_t epoch = 0, std::uint64_t arg = 0,
         std::uint64_t tx = 0, std::vector<std::uint8_t> bytes = {}) {
    Event e;
    e.t = t;
    e.kind = kind;
    e.dev = dev;
    e.epoch = epoch;
    e.arg = arg;
    e.tx = tx;
    e.bytes = std::move(bytes);
    return e;
}

struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.t != b.t ? a.t > b.t : a.order > b.order; }
};

std::string fmt_mwh(double v) { return fmt::format("{:.9f}", v); }

std::string type_field(const std::optional<FrameHeader>& h) {
    if (!h)
        return "-";
    if (is_known_frame_type(h->type))
        return std::string(frame_type_name(static_cast<FrameType>(h->type)));
    return std::to_string(h->type);
}

struct PendingAlert {
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> bytes;
    int attempts = 0;
    std::int64_t first_ms = 0;
};

struct PendingSync {
    std::uint64_t id = 0;
    int attempt = 0;
    std::int64_t t1 = 0;
};

struct SimDevice {
    DeviceSpec spec;
    std::string name;
    FirmwareStateMachine fsm;
    DeviceSession session;
    RadioLink uplink;
    RadioLink downlink;
    const MlpModel* model = nullptr;
    std::vector<Channel> channels; // empty: all
    const SyntheticActivityModel* signals = nullptr;
    bool with_stretch = false;
    std::optional<LabeledRecording> recording;
    std::uint64_t sensor_seed = 0;

    EnergyState energy;
    DutyPlan plan;
    std::array<std::int64_t, 4> dwell_ms{};
    std::int64_t state_since = 0;
    std::int64_t slot_hour = -1;
    std::int64_t slot_used_ms = 0;
    bool locked = false;
    std::uint64_t epoch = 0;

    int still_windows = 0;
    bool canary_pending = false;
    std::vector<SensorSample> window;
    std::optional<InferenceOutput> inference;
    std::string truth;

    std::optional<PendingAlert> alert;
    std::int64_t last_alert_ms = std::numeric_limits<std::int64_t>::min() / 2;
    std::optional<PendingSync> sync;
    std::uint64_t sync_ids = 0;

    SimDevice(const DeviceSpec& s, const Config& c, std::uint64_t seed)
        : spec(s), name(fmt::format("dev:{}", s.id)), session(s.id, c.protocol.key, c.protocol.replay_window),
          uplink(c.channel, seed, fmt::format("uplink/{}", s.id)),
          downlink(c.channel, seed, fmt::format("downlink/{}", s.id)) {}
};

class Simulator {
  public:
    Simulator(const Config& config, std::uint64_t seed, const ScenarioModels& models)
        : cfg_(config), seed_(seed), host_(config.protocol.replay_window) {
        validate_profile(cfg_.device);
        validate_energy_state(cfg_.energy.battery);
        validate_channel(cfg_.channel);
        validate_alert_policy(cfg_.protocol.alert);
        if (cfg_.scenario.devices.empty())
            throw std::invalid_argument("scenario has no devices");
        window_ms_ = std::llround(static_cast<double>(cfg_.pipeline.window) * 1000.0 / cfg_.device.sample_rate_hz);
        cycle_ms_ = window_ms_ + cfg_.scenario.processing_ms + cfg_.scenario.tx_ms;

        devices_.reserve(cfg_.scenario.devices.size());
        for (const auto& spec : cfg_.scenario.devices) {
            auto& d = devices_.emplace_back(spec, cfg_, seed_);
            const auto& slot = spec.app == AppKind::Har ? models.har : models.gesture;
            if (!slot)
                throw std::invalid_argument(fmt::format("no model available for app {}", app_name(spec.app)));
            d.model = &slot->model;
            d.signals = &cfg_.synthetic.for_app(spec.app).model;
            d.with_stretch = d.signals->with_stretch;
            if (cfg_.channels)
                for (Channel c : *cfg_.channels)
                    if (c != Channel::Stretch || d.with_stretch)
                        d.channels.push_back(c);
            if (spec.recording) {
                d.recording = read_dataset(*spec.recording);
                if (d.recording->samples.size() < 2)
                    throw std::invalid_argument("scenario recording needs at least two samples");
                d.with_stretch = d.recording->has_stretch();
            }
            const std::size_t expected_inputs =
                (d.channels.empty() ? channel_count(d.with_stretch) : d.channels.size()) * kFeaturesPerChannel;
            if (d.model->sizes().inputs != expected_inputs)
                throw std::invalid_argument(fmt::format("model for {} expects {} inputs, device produces {}",
                                                        app_name(spec.app), d.model->sizes().inputs,
                                                        expected_inputs));
            d.sensor_seed = derive_seed(seed_, hash_name(fmt::format("sensor/{}", spec.id)));
            d.energy = cfg_.energy.battery;
            d.canary_pending = cfg_.scenario.inject_canary;
            host_.register_device(spec.id, cfg_.protocol.key);
        }
        models_ = &models;
    }

    std::string run() {
        out_ = fmt::format("{}\t{}\n#seed\t{}\n", kTraceMagic, kTraceVersion, seed_);
        if (cfg_.scenario.inject_canary)
            out_ += fmt::format("#canary\t{:.6f},{:.6f},{:.6f}\n", kCanaryAccel[0], kCanaryAccel[1], kCanaryAccel[2]);
        for (const auto* m : {models_->har ? &*models_->har : nullptr, models_->gesture ? &*models_->gesture : nullptr}) {
            if (!m)
                continue;
            const bool har = m == &*models_->har;
            line(0, "model", "sim",
                 fmt::format("app={}\tsource={}\tparams={}\tblob_bytes={}{}", har ? "har" : "gesture", m->source,
                             m->model.parameter_count(), m->blob_bytes,
                             m->test_accuracy_pct ? fmt::format("\ttest_accuracy={:.2f}", *m->test_accuracy_pct)
                                                  : std::string()));
        }

        for (std::size_t i = 0; i < devices_.size(); ++i) {
            auto& d = devices_[i];
            const auto& e = d.energy;
            line(0, "boot", d.name,
                 fmt::format("app={}\tskew={}\tbattery={}\tcapacity={}\tmppt={}\tcharge={}\tdischarge={}\t"
                             "p_sleep={}\tp_active={}\tp_tx={}",
                             app_name(d.spec.app), d.spec.clock_skew_ms, fmt_mwh(e.battery_mwh), e.capacity_mwh,
                             e.mppt_efficiency, e.charge_efficiency, e.discharge_efficiency, cfg_.device.p_sleep_mw,
                             active_power_mw(cfg_.device, d.spec.app), cfg_.device.p_tx_mw));
            replan(d, 0, 0);
            send_uplink(i, 0, FrameType::Hello, std::vector<std::uint8_t>{static_cast<std::uint8_t>(d.spec.app)});
            schedule(at(0, Ev::MotionPoll, i, d.epoch));
            schedule(at(1000 + 100 * static_cast<std::int64_t>(i), Ev::SyncStart, i));
        }
        const std::int64_t end = cfg_.scenario.duration_ms;
        for (std::int64_t t = kMsPerHour; t < end; t += kMsPerHour)
            schedule(at(t, Ev::EnergyTick));

        while (!queue_.empty() && queue_.top().t < end) {
            Event ev = queue_.top();
            queue_.pop();
            now_ = ev.t;
            dispatch(ev);
        }
        now_ = end;
        energy_tick(end);
        // Frames already on the air still arrive; nothing else runs past the end.
        while (!queue_.empty()) {
            Event ev = queue_.top();
            queue_.pop();
            if (ev.kind != Ev::HostRx && ev.kind != Ev::DeviceRx)
                continue;
            now_ = ev.t;
            dispatch(ev);
        }
        line(now_, "end", "sim", fmt::format("duration={}", end));
        return std::move(out_);
    }

    std::string observations_csv() const { return host_.observations_csv(); }

  private:
    void line(std::int64_t t, std::string_view kind, std::string_view entity, std::string_view detail) {
        out_ += fmt::format("{}\t{}\t{}", t, kind, entity);
        if (!detail.empty()) {
            out_ += '\t';
            out_ += detail;
        }
        out_ += '\n';
    }

    void schedule(Event ev) {
        if (ev.t < now_)
            throw std::logic_error("event scheduled in the past");
        ev.order = order_++;
        queue_.push(std::move(ev));
    }

    // ---- device clock, ground truth and sensors -------------------------

    std::int64_t device_clock(const SimDevice& d, std::int64_t t) const { return t + d.spec.clock_skew_ms; }

    std::optional<Label> truth_at(const SimDevice& d, std::int64_t t) const {
        if (d.recording) {
            const auto span = d.recording->samples.back().t_ms - d.recording->samples.front().t_ms + 1;
            return d.recording->label_at(d.recording->samples.front().t_ms + t % span);
        }
        const std::int64_t tod = t % kMsPerDay;
        for (const auto& e : d.spec.episodes)
            if (((tod - e.start_ms) % kMsPerDay + kMsPerDay) % kMsPerDay < e.duration_ms)
                return e.label;
        return std::nullopt;
    }

    std::vector<SensorSample> sense(const SimDevice& d, std::int64_t t0, std::size_t count, Rng& rng) const {
        std::vector<SensorSample> out;
        out.reserve(count);
        const double rate = cfg_.device.sample_rate_hz;
        if (d.recording) {
            const auto& s = d.recording->samples;
            const auto span = s.back().t_ms - s.front().t_ms + 1;
            const auto first = s.front().t_ms + t0 % span;
            auto it = std::lower_bound(s.begin(), s.end(), first,
                                       [](const SensorSample& x, std::int64_t v) { return x.t_ms < v; });
            std::size_t idx = static_cast<std::size_t>(it - s.begin()) % s.size();
            for (std::size_t k = 0; k < count; ++k, idx = (idx + 1) % s.size()) {
                auto sample = s[idx];
                sample.t_ms = t0 + std::llround(static_cast<double>(k) * 1000.0 / rate);
                out.push_back(sample);
            }
            return out;
        }
        std::size_t k = 0;
        while (k < count) {
            const auto t_k = [&](std::size_t i) { return t0 + std::llround(static_cast<double>(i) * 1000.0 / rate); };
            const auto label = truth_at(d, t_k(k));
            std::size_t run = 1;
            while (k + run < count && truth_at(d, t_k(k + run)) == label)
                ++run;
            const ClassSignal sig = label && d.signals->classes.contains(*label) ? d.signals->classes.at(*label)
                                                                                 : resting_signal();
            append_class_samples(out, sig, d.with_stretch, rate, t0, static_cast<std::int64_t>(k),
                                 static_cast<std::int64_t>(run), rng);
            k += run;
        }
        return out;
    }

    std::string truth_name(const SimDevice& d, std::int64_t from, std::int64_t to) const {
        std::map<std::string, int> votes;
        for (std::int64_t t = from; t < to; t += 10) {
            const auto l = truth_at(d, t);
            ++votes[l ? std::string(label_name(*l)) : std::string("none")];
        }
        std::string best = "none";
        int n = -1;
        for (const auto& [k, v] : votes)
            if (v > n) {
                best = k;
                n = v;
            }
        return best;
    }

    // ---- power state bookkeeping -----------------------------------------

    void step(std::size_t i, DeviceEventKind kind, std::optional<InferenceOutput> inference = std::nullopt) {
        auto& d = devices_[i];
        const PowerState from = d.fsm.state();
        const auto r = d.fsm.step(DeviceEvent{kind, std::move(inference)});
        if (r.noop) {
            line(now_, "noop", d.name, fmt::format("state={}\tevent={}", state_name(from), event_name(kind)));
            return;
        }
        account_dwell(d, now_);
        line(now_, "state", d.name,
             fmt::format("from={}\tto={}\tevent={}", state_name(from), state_name(r.state), event_name(kind)));
        for (const auto& a : r.actions)
            if (a.kind == ActionKind::EnqueueData && a.data)
                transmit_result(i, *a.data);
    }

    void account_dwell(SimDevice& d, std::int64_t t) {
        d.dwell_ms[static_cast<std::size_t>(d.fsm.state())] += t - d.state_since;
        d.state_since = t;
    }

    std::int64_t allowance_ms(const SimDevice& d, std::int64_t t) const {
        const auto slot = static_cast<std::size_t>(HarvestProfile::slot_of(t));
        return static_cast<std::int64_t>(std::floor(d.plan.active_fraction[slot] * static_cast<double>(kMsPerHour)));
    }

    // A cycle may start only if it fits in what is left of this hour's
    // active allowance and ends before the hour does.
    bool reserve_cycle(SimDevice& d, std::int64_t t) {
        if (d.locked)
            return false;
        const std::int64_t hour = t / kMsPerHour;
        if (hour != d.slot_hour) {
            d.slot_hour = hour;
            d.slot_used_ms = 0;
        }
        if (d.slot_used_ms + cycle_ms_ > allowance_ms(d, t) || t + cycle_ms_ > (hour + 1) * kMsPerHour)
            return false;
        d.slot_used_ms += cycle_ms_;
        return true;
    }

    void replan(SimDevice& d, std::int64_t t, std::int64_t day) {
        const double active = std::max(active_power_mw(cfg_.device, d.spec.app), cfg_.device.p_tx_mw);
        d.plan = plan_duty_cycle(cfg_.energy.harvest, active, cfg_.device.p_sleep_mw, d.energy, cfg_.energy.plan);
        std::string fr;
        for (std::size_t s = 0; s < d.plan.active_fraction.size(); ++s)
            fr += fmt::format("{}{:.6f}", s ? "," : "", d.plan.active_fraction[s]);
        line(t, "plan", d.name,
             fmt::format("day={}\tplanned={}\tbudget={}\tfeasible={}\tfractions={}", day, fmt_mwh(d.plan.planned_mwh),
                         fmt_mwh(d.plan.budget_mwh), d.plan.feasible ? 1 : 0, fr));
    }

    void energy_tick(std::int64_t t) {
        const std::int64_t dt = t - last_tick_;
        if (dt > 0) {
            const double harvest_mw = cfg_.energy.harvest.at(last_tick_);
            for (std::size_t i = 0; i < devices_.size(); ++i) {
                auto& d = devices_[i];
                account_dwell(d, t);
                StateDwell frac{};
                for (std::size_t s = 0; s < 4; ++s)
                    frac[s] = static_cast<double>(d.dwell_ms[s]) / static_cast<double>(dt);
                const auto before = d.energy.battery_mwh;
                const auto r = account_energy(frac, cfg_.device, d.spec.app, d.energy, harvest_mw, dt);
                line(t, "energy", d.name,
                     fmt::format("dt={}\tdwell={},{},{},{}\tharvest_mw={}\tbefore={}\tharvested={}\tconsumed={}\t"
                                 "applied={}\tspilled={}\tdeficit={}\tafter={}",
                                 dt, d.dwell_ms[0], d.dwell_ms[1], d.dwell_ms[2], d.dwell_ms[3], harvest_mw,
                                 fmt_mwh(before), fmt_mwh(r.harvested_mwh), fmt_mwh(r.consumed_mwh),
                                 fmt_mwh(r.applied_mwh), fmt_mwh(r.spilled_mwh), fmt_mwh(r.deficit_mwh),
                                 fmt_mwh(r.state.battery_mwh)));
                d.energy = r.state;
                d.dwell_ms.fill(0);
                if (r.depleted) {
                    line(t, "depleted", d.name, fmt::format("battery={}", fmt_mwh(d.energy.battery_mwh)));
                    d.locked = true;
                    ++d.epoch;
                    if (d.fsm.state() != PowerState::Sleep) {
                        const PowerState from = d.fsm.state();
                        d.fsm.force_sleep();
                        line(t, "state", d.name,
                             fmt::format("from={}\tto=Sleep\tevent=BatteryDepleted", state_name(from)));
                    }
                } else if (d.locked && d.energy.battery_mwh >= kRecoveryFraction * d.energy.capacity_mwh) {
                    d.locked = false;
                    ++d.epoch;
                    line(t, "recovered", d.name, fmt::format("battery={}", fmt_mwh(d.energy.battery_mwh)));
                    if (t < cfg_.scenario.duration_ms)
                        schedule(at(t, Ev::MotionPoll, i, d.epoch));
                }
            }
        }
        last_tick_ = t;
        if (t % kMsPerDay == 0 && t > 0) {
            const std::int64_t day = t / kMsPerDay;
            for (auto& d : devices_) {
                line(t, "day", d.name, fmt::format("day={}\tbattery={}", day, fmt_mwh(d.energy.battery_mwh)));
                if (t < cfg_.scenario.duration_ms)
                    replan(d, t, day);
            }
        }
    }

    // ---- radio -----------------------------------------------------------

    void put_on_air(std::string_view kind, std::string_view entity, std::size_t i, bool uplink, std::uint32_t seq,
                    FrameType type, const std::vector<std::uint8_t>& bytes) {
        auto& d = devices_[i];
        const std::uint64_t tx = tx_ids_++;
        line(now_, kind, entity,
             fmt::format("tx={}\tdir={}\tdev={}\ttype={}\tseq={}\tlen={}\tbytes={}", tx, uplink ? "up" : "down",
                         d.spec.id, frame_type_name(type), seq, bytes.size(), to_hex(bytes)));
        auto t = (uplink ? d.uplink : d.downlink).transmit(bytes);
        if (t.lost) {
            line(now_, "drop", "link", fmt::format("tx={}", tx));
            return;
        }
        schedule(at(now_ + t.latency_ms, uplink ? Ev::HostRx : Ev::DeviceRx, i, 0, 0, tx, std::move(t.bytes)));
    }

    std::uint32_t send_uplink(std::size_t i, std::int64_t, FrameType type, const std::vector<std::uint8_t>& payload) {
        auto& d = devices_[i];
        auto f = d.session.seal(type, payload);
        put_on_air("send", d.name, i, true, f.seq, type, f.bytes);
        if (type == FrameType::Alert)
            d.alert = PendingAlert{f.seq, f.bytes, 1, now_};
        return f.seq;
    }

    void transmit_result(std::size_t i, const InferenceOutput& out) {
        auto& d = devices_[i];
        const auto payload = encode_data_payload(DataPayload::from_inference(out));
        const Label label = label_decode(out.app, out.label_index);
        const bool alert = is_alert_label(cfg_.protocol.alert, label) && !d.alert &&
                           now_ - d.last_alert_ms >= cfg_.protocol.alert_cooldown_ms;
        if (!alert) {
            send_uplink(i, now_, FrameType::Data, payload);
            return;
        }
        d.last_alert_ms = now_;
        const auto seq = send_uplink(i, now_, FrameType::Alert, payload);
        line(now_, "alert", d.name, fmt::format("seq={}\tlabel={}", seq, label_name(label)));
        schedule(at(now_ + cfg_.protocol.alert.retry_interval_ms, Ev::AlertTimer, i, 0, seq));
    }

    // ---- event handlers --------------------------------------------------

    void dispatch(Event& ev) {
        switch (ev.kind) {
        case Ev::EnergyTick: energy_tick(ev.t); return;
        case Ev::HostRx: on_host_rx(ev); return;
        case Ev::DeviceRx: on_device_rx(ev); return;
        case Ev::AlertTimer:
            // Deliveries already queued for this millisecond run first.
            schedule(at(ev.t, Ev::AlertFire, ev.dev, 0, ev.arg));
            return;
        case Ev::AlertFire: on_alert_fire(ev); return;
        case Ev::SyncStart: start_sync(ev.dev, 0); return;
        case Ev::SyncTimeout: on_sync_timeout(ev); return;
        default: break;
        }
        auto& d = devices_[ev.dev];
        if (ev.epoch != d.epoch)
            return;
        switch (ev.kind) {
        case Ev::MotionPoll: on_poll(ev.dev); break;
        case Ev::WindowFull: on_window_full(ev.dev); break;
        case Ev::InferenceDone: on_inference_done(ev.dev); break;
        case Ev::TxDone: on_tx_done(ev.dev); break;
        default: break;
        }
    }

    void next_poll(std::size_t i) {
        auto& d = devices_[i];
        const auto p = cfg_.scenario.motion_poll_ms;
        schedule(at((now_ / p + 1) * p, Ev::MotionPoll, i, d.epoch));
    }

    void on_poll(std::size_t i) {
        auto& d = devices_[i];
        if (d.locked || d.fsm.state() != PowerState::Sleep)
            return;
        Rng rng(derive_seed(d.sensor_seed, static_cast<std::uint64_t>(now_)));
        const auto samples = sense(d, now_, cfg_.scenario.motion_poll_samples, rng);
        if (motion_detector(samples, cfg_.scenario.motion_threshold_g) && reserve_cycle(d, now_)) {
            d.still_windows = 0;
            step(i, DeviceEventKind::MotionDetected);
            schedule(at(now_ + window_ms_, Ev::WindowFull, i, d.epoch));
            return;
        }
        next_poll(i);
    }

    void on_window_full(std::size_t i) {
        auto& d = devices_[i];
        const std::int64_t start = now_ - window_ms_;
        Rng rng(derive_seed(d.sensor_seed ^ 0x5a5a5a5a5a5a5a5aULL, static_cast<std::uint64_t>(start)));
        d.window = sense(d, start, cfg_.pipeline.window, rng);
        if (d.canary_pending) {
            d.window.front().accel = kCanaryAccel;
            d.canary_pending = false;
        }
        d.still_windows = motion_detector(d.window, cfg_.scenario.motion_threshold_g) ? 0 : d.still_windows + 1;
        d.truth = truth_name(d, start, now_);

        auto features = extract_features(d.window);
        if (!d.channels.empty())
            features = select_channels(features, d.channels);
        const auto probs = forward(*d.model, features);
        const auto label = argmax(probs);
        d.inference = InferenceOutput{device_clock(d, start), static_cast<std::uint8_t>(label), probs[label], d.spec.app};
        step(i, DeviceEventKind::WindowFull);
        schedule(at(now_ + cfg_.scenario.processing_ms, Ev::InferenceDone, i, d.epoch));
    }

    void on_inference_done(std::size_t i) {
        auto& d = devices_[i];
        const auto& inf = *d.inference;
        line(now_, "infer", d.name,
             fmt::format("label={}\tconf={:.4f}\ttruth={}", label_name(label_decode(inf.app, inf.label_index)),
                         inf.confidence, d.truth));
        step(i, DeviceEventKind::InferenceDone, d.inference);
        schedule(at(now_ + cfg_.scenario.tx_ms, Ev::TxDone, i, d.epoch));
    }

    void on_tx_done(std::size_t i) {
        auto& d = devices_[i];
        step(i, DeviceEventKind::TxDone);
        if (d.still_windows >= cfg_.scenario.idle_windows || !reserve_cycle(d, now_)) {
            step(i, DeviceEventKind::IdleTimeout);
            next_poll(i);
            return;
        }
        schedule(at(now_ + window_ms_, Ev::WindowFull, i, d.epoch));
    }

    void on_host_rx(Event& ev) {
        const auto r = host_.receive(ev.bytes, now_);
        const auto h = peek_header(ev.bytes);
        line(now_, "recv", "host",
             fmt::format("tx={}\tdev={}\ttype={}\tseq={}\tstatus={}", ev.tx, h ? h->device_id : 0, type_field(h),
                         h ? h->seq : 0, decode_status_name(r.status)));
        if (r.notified)
            line(now_, "notify", "host",
                 fmt::format("dev={}\tseq={}\tlabel={}\tcorrected={}", r.notified->device_id, r.notified->seq,
                             label_name(label_decode(r.notified->app, r.notified->label_index)),
                             r.notified->corrected_t_ms));
        if (r.replies.empty() || !r.frame)
            return;
        const auto dev = std::find_if(devices_.begin(), devices_.end(),
                                      [&](const SimDevice& d) { return d.spec.id == r.frame->device_id; });
        const auto i = static_cast<std::size_t>(dev - devices_.begin());
        for (const auto& reply : r.replies) {
            const auto rh = peek_header(reply.bytes);
            put_on_air("send", "host", i, false, reply.seq, static_cast<FrameType>(rh->type), reply.bytes);
        }
    }

    void on_device_rx(Event& ev) {
        auto& d = devices_[ev.dev];
        const auto opened = d.session.open(ev.bytes);
        const auto h = peek_header(ev.bytes);
        line(now_, "devrecv", d.name,
             fmt::format("tx={}\ttype={}\tseq={}\tstatus={}", ev.tx, type_field(h), h ? h->seq : 0,
                         decode_status_name(opened.status)));
        if (!opened.ok())
            return;
        try {
            if (opened.frame.type == FrameType::Ack) {
                const auto ack = decode_ack_payload(opened.frame.payload);
                if (ack.acked_type == FrameType::Alert && d.alert && d.alert->seq == ack.acked_seq) {
                    line(now_, "alert-delivered", d.name,
                         fmt::format("seq={}\tattempts={}\tlatency={}", d.alert->seq, d.alert->attempts,
                                     now_ - d.alert->first_ms));
                    d.alert.reset();
                }
            } else if (opened.frame.type == FrameType::TimeSync) {
                const auto p = decode_sync_payload(opened.frame.payload);
                if (p.kind == SyncKind::Response && d.sync && p.a == d.sync->t1)
                    finish_sync(ev.dev, p);
            }
        } catch (const PayloadError&) {
        }
    }

    void on_alert_fire(const Event& ev) {
        auto& d = devices_[ev.dev];
        if (!d.alert || d.alert->seq != ev.arg)
            return;
        if (d.alert->attempts >= cfg_.protocol.alert.max_attempts) {
            line(now_, "alert-undelivered", d.name,
                 fmt::format("seq={}\tattempts={}", d.alert->seq, d.alert->attempts));
            d.alert.reset();
            return;
        }
        ++d.alert->attempts;
        put_on_air("resend", d.name, ev.dev, true, d.alert->seq, FrameType::Alert, d.alert->bytes);
        schedule(at(now_ + cfg_.protocol.alert.retry_interval_ms, Ev::AlertTimer, ev.dev, 0, ev.arg));
    }

    void start_sync(std::size_t i, int attempt) {
        auto& d = devices_[i];
        const std::int64_t t1 = device_clock(d, now_);
        d.sync = PendingSync{++d.sync_ids, attempt, t1};
        send_uplink(i, now_, FrameType::TimeSync, encode_sync_payload({SyncKind::Request, t1, 0, 0}));
        schedule(at(now_ + cfg_.protocol.sync.reply_timeout_ms, Ev::SyncTimeout, i, 0, d.sync->id));
    }

    void on_sync_timeout(const Event& ev) {
        auto& d = devices_[ev.dev];
        if (!d.sync || d.sync->id != ev.arg)
            return;
        if (d.sync->attempt < cfg_.protocol.sync.max_retries) {
            start_sync(ev.dev, d.sync->attempt + 1);
            return;
        }
        line(now_, "sync-timeout", d.name, fmt::format("attempts={}", d.sync->attempt + 1));
        d.sync.reset();
        schedule(at(now_ + cfg_.protocol.sync_interval_ms, Ev::SyncStart, ev.dev));
    }

    void finish_sync(std::size_t i, const TimeSyncPayload& p) {
        auto& d = devices_[i];
        const std::int64_t t4 = device_clock(d, now_);
        const double offset = estimate_offset(p.a, p.b, p.c, t4);
        const std::int64_t rtt = round_trip_ms(p.a, p.b, p.c, t4);
        line(now_, "sync", d.name,
             fmt::format("offset={}\trtt={}\tattempts={}", offset, rtt, d.sync->attempt + 1));
        d.sync.reset();
        send_uplink(i, now_, FrameType::TimeSync,
                    encode_sync_payload({SyncKind::Report, std::llround(offset * 1000.0), rtt, 0}));
        schedule(at(now_ + cfg_.protocol.sync_interval_ms, Ev::SyncStart, i));
    }

    const Config& cfg_;
    std::uint64_t seed_;
    const ScenarioModels* models_ = nullptr;
    HostGateway host_;
    std::vector<SimDevice> devices_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t order_ = 0;
    std::uint64_t tx_ids_ = 0;
    std::int64_t now_ = 0;
    std::int64_t last_tick_ = 0;
    std::int64_t window_ms_ = 0;
    std::int64_t cycle_ms_ = 0;
    std::string out_;
};

} // namespace

ScenarioModels prepare_models(const Config& config) {
    ScenarioModels models;
    for (const auto& d : config.scenario.devices) {
        auto& slot = d.app == AppKind::Har ? models.har : models.gesture;
        if (slot)
            continue;
        const auto& path = d.app == AppKind::Har ? config.scenario.har_model : config.scenario.gesture_model;
        slot = path ? deploy(load_model(*path), path->filename().string()) : train_for(config, d.app);
    }
    return models;
}

SimTrace run_scenario(const Config& config, std::uint64_t seed, const ScenarioModels& models) {
    Simulator sim(config, seed, models);
    SimTrace trace;
    trace.text = sim.run();
    trace.metrics = compute_metrics(trace.text);
    trace.observations_csv = sim.observations_csv();
    return trace;
}

SimTrace run_scenario(const Config& config, std::uint64_t seed) {
    return run_scenario(config, seed, prepare_models(config));
}

} // namespace openhealth
