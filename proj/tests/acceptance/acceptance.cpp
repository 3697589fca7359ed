// Acceptance harness: runs each criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is 0 only when all pass.
//
//   acceptance [--data recording.csv]
//
// With --data, criterion 1 also trains on the supplied recording and prints
// its accuracy table for comparison with the published one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "openhealth/alert.hpp"
#include "openhealth/config.hpp"
#include "openhealth/dataset.hpp"
#include "openhealth/energy.hpp"
#include "openhealth/eval.hpp"
#include "openhealth/experiment.hpp"
#include "openhealth/frame.hpp"
#include "openhealth/host.hpp"
#include "openhealth/memory.hpp"
#include "openhealth/model_io.hpp"
#include "openhealth/rng.hpp"
#include "openhealth/session.hpp"
#include "openhealth/sim.hpp"
#include "openhealth/sync.hpp"
#include "openhealth/synthetic.hpp"
#include "openhealth/trace.hpp"
#include "oracles.hpp"

using namespace openhealth;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = OPENHEALTH_SOURCE_DIR;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct CliResult {
    int code;
    std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / fmt::format("openhealth-acceptance-{}", ::getpid());
    fs::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(std::stoul(std::string(hex.substr(i, 2)), nullptr, 16)));
    return out;
}

// Shared fixtures, built on first use.
struct Fixtures {
    Config reference = default_config();
    std::optional<ScenarioModels> models;
    std::optional<SimTrace> reference_run;
    std::optional<ExperimentResult> har;

    const ScenarioModels& scenario_models() {
        if (!models)
            models = prepare_models(reference);
        return *models;
    }
    const SimTrace& reference_trace() {
        if (!reference_run)
            reference_run = run_scenario(reference, 1, scenario_models());
        return *reference_run;
    }
};

// ---- 1 -----------------------------------------------------------------------

Verdict methodology(Fixtures& fx, const std::optional<fs::path>& data) {
    const auto start = std::chrono::steady_clock::now();
    const auto& c = fx.reference;
    const auto& corpus = c.synthetic.har;
    const auto rec = generate_synthetic(corpus.model, corpus.schedule(), c.device.sample_rate_hz);
    const auto windows = featurize(rec, c.pipeline);
    fx.har = run_experiment(windows, c.pipeline, c.train);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::cout << render_table(fx.har->report);
    double worst = 100.0;
    for (const auto& s : fx.har->report.per_class)
        worst = std::min(worst, s.accuracy_pct());
    const bool all_classes = fx.har->report.per_class.size() == 7;

    if (data) {
        const auto supplied = featurize(read_dataset(*data), c.pipeline);
        const auto r = run_experiment(supplied, c.pipeline, c.train);
        std::cout << "supplied recording " << data->string() << ":\n" << render_table(r.report);
    }
    return {all_classes && worst >= 90.0 && seconds < 60.0,
            fmt::format("{} windows, lowest class {:.1f}% (need >= 90), {:.1f} s (need < 60)", windows.labels.size(),
                        worst, seconds)};
}

// ---- 2 -----------------------------------------------------------------------

Verdict report_formatting(Fixtures&) {
    const auto r = run_cli({"eval", "--counts",
                            "Drive=154/155,Jump=169/181,LieDown=204/204,Sit=385/394,Stand=345/350,Walk=794/806,"
                            "Transition=115/127"});
    const auto golden = slurp(kSourceDir / "docs/formats/accuracy_table.txt");
    const bool cells = format_accuracy(154, 155) == "99.4" && format_accuracy(204, 204) == "100" &&
                       format_accuracy(794, 806) == "98.5";
    const bool rows = r.out.find("154 / 155   99.4\n") != std::string::npos &&
                      r.out.find("204 / 204   100\n") != std::string::npos &&
                      r.out.find("794 / 806   98.5\n") != std::string::npos;
    return {r.code == 0 && cells && rows && !golden.empty() && r.out == golden,
            fmt::format("cells {}, rows {}, golden {}", cells ? "ok" : "wrong", rows ? "ok" : "wrong",
                        r.out == golden ? "byte-equal" : "differs")};
}

// ---- 3 -----------------------------------------------------------------------

Verdict gradients(Fixtures&) {
    double worst = 0;
    std::size_t compared = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = oracle::gradient_check(seed, 20);
        worst = std::max(worst, r.max_relative_error);
        compared += r.compared;
    }
    return {compared == 200 && worst < 1e-5, fmt::format("{} parameters, max relative error {:.3g}", compared, worst)};
}

// ---- 4 -----------------------------------------------------------------------

Verdict storage(Fixtures&) {
    const auto r =
        run_cli({"budget", "--rate", "250", "--storage-channels", "3", "--bytes-per-scalar", "2"});
    const double exact = storage_budget(250, 3, 2, 3600);
    const bool line = r.out.find("5,400,000 bytes/hour") != std::string::npos;
    return {r.code == 0 && exact == 5'400'000.0 && line && exact > 5e6,
            fmt::format("{:.0f} bytes/hour, cli line {}", exact, line ? "present" : "missing")};
}

// ---- 5 -----------------------------------------------------------------------

Verdict budgets(Fixtures& fx) {
    const auto& c = fx.reference;
    const auto sizes = layers_for(AppKind::Har, channel_count(true), c.pipeline.hidden_units);
    const auto m = memory_footprint(c.pipeline.window, channel_count(true), sizes, true, c.device);
    if (!fx.har)
        return {false, "needs criterion 1"};
    const auto blob = serialize_quantized(quantize(fx.har->trained.model)).size();
    const bool ok = m.sram_used_bytes <= 20480 && m.flash_used_bytes <= 131072 && blob < 2048 &&
                    blob == quantized_blob_size(sizes, true);
    return {ok, fmt::format("sram {} / 20480, flash {} / 131072, int8 model {} bytes", m.sram_used_bytes,
                            m.flash_used_bytes, blob)};
}

// ---- 6 -----------------------------------------------------------------------

Verdict energy_neutrality(Fixtures& fx) {
    const auto& c = fx.reference;
    // premise: the reference plan never schedules more than the slot harvests
    bool premise = true;
    for (AppKind app : {AppKind::Har, AppKind::Gesture}) {
        // the simulator plans with the larger of the active and radio powers
        const double active = std::max(state_power_mw(PowerState::Processing, c.device, app), c.device.p_tx_mw);
        const double sleep = state_power_mw(PowerState::Sleep, c.device, app);
        const auto plan = plan_duty_cycle(c.energy.harvest, active, sleep, c.energy.battery, c.energy.plan);
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            const double f = plan.active_fraction[s];
            const double h = c.energy.battery.mppt_efficiency * c.energy.harvest.slot_mw[s];
            premise = premise && f * active + (1 - f) * sleep <= std::max(h, sleep) + 1e-12;
        }
    }

    const auto parsed = parse_trace(fx.reference_trace().text);
    const std::int64_t days = c.scenario.duration_ms / kMsPerDay;
    // battery at each day boundary, per device
    std::map<std::string, std::vector<double>> at_boundary;
    std::map<std::string, double> last_after;
    double worst_residual = 0;
    int devices = 0;
    for (const auto& e : parsed.events) {
        if (e.kind == "boot") {
            ++devices;
            at_boundary[e.entity] = {e.number("battery")};
            last_after[e.entity] = e.number("battery");
        } else if (e.kind == "energy") {
            const double before = e.number("before"), after = e.number("after");
            const double residual = std::abs(before + e.number("applied") - e.number("spilled") +
                                             e.number("deficit") - after);
            worst_residual = std::max({worst_residual, residual, std::abs(before - last_after[e.entity])});
            last_after[e.entity] = after;
            auto& marks = at_boundary[e.entity];
            if (e.t_ms % kMsPerDay == 0 && e.t_ms / kMsPerDay == static_cast<std::int64_t>(marks.size()))
                marks.push_back(after);
        }
    }
    bool neutral = devices > 0;
    double worst_day = std::numeric_limits<double>::infinity();
    for (const auto& [entity, marks] : at_boundary) {
        neutral = neutral && static_cast<std::int64_t>(marks.size()) == days + 1;
        for (std::size_t d = 1; d < marks.size(); ++d) {
            worst_day = std::min(worst_day, marks[d] - marks[d - 1]);
            neutral = neutral && marks[d] >= marks[d - 1];
        }
    }
    const bool conserved = worst_residual <= 1e-6;
    ReplayOptions energy_only;
    energy_only.sequence = energy_only.canary = energy_only.completeness = false;
    const bool replay_ok = replay(fx.reference_trace().text, energy_only).passed;
    return {premise && neutral && conserved && replay_ok,
            fmt::format("{} devices x {} days, smallest daily change {:+.6f} mWh, ledger residual {:.2g} mWh, "
                        "plan within harvest {}",
                        devices, days, worst_day, worst_residual, premise ? "yes" : "no")};
}

// ---- 7 -----------------------------------------------------------------------

Verdict power_arithmetic(Fixtures& fx) {
    EnergyState e;
    e.battery_mwh = 500;
    e.charge_efficiency = e.discharge_efficiency = 1.0;
    const auto har = account_energy(dwell_in(PowerState::Processing), fx.reference.device, AppKind::Har, e, 0.0,
                                    kMsPerHour);
    const auto gesture = account_energy(dwell_in(PowerState::Processing), fx.reference.device, AppKind::Gesture, e,
                                        0.0, kMsPerHour);
    const bool ok = har.consumed_mwh == 12.5 && har.state.battery_mwh == 487.5 && gesture.consumed_mwh == 10.0 &&
                    gesture.state.battery_mwh == 490.0;
    return {ok, fmt::format("har {} mWh, gesture {} mWh", har.consumed_mwh, gesture.consumed_mwh)};
}

// ---- 8 -----------------------------------------------------------------------

Verdict protocol(Fixtures& fx) {
    const Key key = key_from_hex("000102030405060708090a0b0c0d0e0f");
    Rng rng(8, "acceptance-frames");
    auto random_bytes = [&](std::size_t n) {
        std::vector<std::uint8_t> v(n);
        for (auto& b : v)
            b = static_cast<std::uint8_t>(rng.next_u64());
        return v;
    };

    int round_trips = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto type = static_cast<FrameType>(rng.uniform_int(1, 6));
        const auto dev = static_cast<std::uint16_t>(rng.uniform_int(0, 0xffff));
        const auto seq = static_cast<std::uint32_t>(rng.uniform_int(1, 0xffffffffLL));
        const auto payload = random_bytes(static_cast<std::size_t>(rng.uniform_int(0, 512)));
        ReplayWindow w;
        const auto out = decode_frame(encode_frame(type, dev, seq, payload, key), key, w);
        round_trips += out.ok() && out.frame == Frame{type, dev, seq, payload};
    }

    int tamper_rejected = 0;
    const auto good = encode_frame(FrameType::Data, 3, 42, random_bytes(12), key);
    for (int i = 0; i < 100; ++i) {
        auto bad = good;
        const auto bit = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(bad.size() * 8 - 1)));
        bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        ReplayWindow w;
        tamper_rejected += !decode_frame(bad, key, w).ok();
    }

    ReplayWindow w;
    const auto first = encode_frame(FrameType::Data, 9, 100, random_bytes(8), key);
    const auto older = encode_frame(FrameType::Data, 9, 99, random_bytes(8), key);
    const bool accepted = decode_frame(first, key, w).ok() && decode_frame(older, key, w).ok();
    const bool replays_rejected = decode_frame(first, key, w).status == DecodeStatus::ReplayRejected &&
                                  decode_frame(older, key, w).status == DecodeStatus::ReplayRejected;

    // every fresh transmission in the reference trace uses its own nonce
    std::set<Nonce> nonces;
    std::size_t sends = 0, duplicates = 0;
    for (const auto& e : parse_trace(fx.reference_trace().text).events) {
        if (e.kind != "send")
            continue;
        const auto bytes = from_hex(e.at("bytes"));
        const auto h = peek_header(bytes);
        if (!h)
            continue;
        ++sends;
        duplicates += !nonces.insert(frame_nonce(h->device_id, h->seq)).second;
    }
    const bool ok = round_trips == 1000 && tamper_rejected == 100 && accepted && replays_rejected && sends > 0 &&
                    duplicates == 0;
    return {ok, fmt::format("{}/1000 round trips, {}/100 tampered rejected, replay {}, {} trace nonces with {} repeats",
                            round_trips, tamper_rejected, replays_rejected ? "rejected" : "accepted", sends,
                            duplicates)};
}

// ---- 9 -----------------------------------------------------------------------

Verdict privacy(Fixtures& fx) {
    if (!fx.reference.scenario.inject_canary)
        return {false, "canary injection is off in the reference config"};
    const auto parsed = parse_trace(fx.reference_trace().text);
    const auto it = parsed.header.find("canary");
    if (it == parsed.header.end())
        return {false, "trace has no canary header"};
    Vec3 canary{};
    std::istringstream ss(it->second);
    char comma;
    ss >> canary[0] >> comma >> canary[1] >> comma >> canary[2];
    const auto patterns = canary_patterns(canary);
    std::size_t hits = 0, frames = 0, bytes = 0;
    for (const auto& e : parsed.events) {
        if (e.kind != "send" && e.kind != "resend")
            continue;
        const auto raw = from_hex(e.at("bytes"));
        ++frames;
        bytes += raw.size();
        hits += count_pattern_hits(raw, patterns);
    }
    return {frames > 0 && hits == 0,
            fmt::format("{} patterns over {} frames ({} bytes): {} occurrences", patterns.size(), frames, bytes, hits)};
}

// ---- 10 ----------------------------------------------------------------------

Verdict sync_accuracy(Fixtures&) {
    const Key key = key_from_hex("0f0e0d0c0b0a09080706050403020100");
    auto exchange = [&](std::int64_t up_ms, std::int64_t down_ms, std::int64_t offset) {
        HostGateway host;
        host.register_device(1, key);
        DeviceSession device(1, key);
        RadioLink up({up_ms, up_ms, 0, 0}, 1, "up"), down({down_ms, down_ms, 0, 0}, 1, "down");
        return sync_exchange(device, host, up, down, {}, 0, offset);
    };
    int symmetric = 0, symmetric_total = 0;
    for (std::int64_t offset : {-86'400'000LL, -1234LL, 0LL, 500LL, 3'600'000LL})
        for (std::int64_t lat : {0, 5, 40, 250}) {
            const auto out = exchange(lat, lat, offset);
            ++symmetric_total;
            symmetric += out.completed && out.state.offset_ms == static_cast<double>(offset);
        }
    int asymmetric = 0, asymmetric_total = 0;
    for (auto [u, d] : {std::pair{10, 30}, {30, 10}, {0, 100}, {7, 8}}) {
        const auto out = exchange(u, d, 500);
        ++asymmetric_total;
        asymmetric += out.completed && out.state.offset_ms - 500.0 == (u - d) / 2.0;
    }
    const bool formula = estimate_offset(0, 10, 10, 40) == -10.0 && estimate_offset(1000, 1520, 1520, 1040) == 500.0;
    return {symmetric == symmetric_total && asymmetric == asymmetric_total && formula,
            fmt::format("symmetric exact {}/{}, asymmetric error = asymmetry/2 {}/{}", symmetric, symmetric_total,
                        asymmetric, asymmetric_total)};
}

// ---- 11 ----------------------------------------------------------------------

Verdict alerts(Fixtures&) {
    const Key key = key_from_hex("a0a1a2a3a4a5a6a7a8a9aaabacadaeaf");
    const DataPayload jump{5000, 1, 9000, AppKind::Har};
    AlertPolicy policy;
    policy.alert_labels = {ActivityLabel::Jump};
    auto send = [&](double loss, std::uint64_t seed) {
        HostGateway host;
        host.register_device(1, key);
        DeviceSession device(1, key);
        RadioLink up({10, 10, loss, 0}, seed, "up"), down({10, 10, loss, 0}, seed, "down");
        return send_alert(device, host, jump, up, down, policy, 0);
    };
    const auto clean = send(0.0, 1);
    const auto lost = send(1.0, 1);
    bool reproducible = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto a = send(0.5, seed), b = send(0.5, seed);
        reproducible = reproducible && a.attempts == b.attempts && a.delivered == b.delivered && a.end_ms == b.end_ms;
    }
    const bool ok = clean.delivered && clean.attempts == 1 && !lost.delivered && lost.attempts == 10 && reproducible;
    return {ok, fmt::format("lossless {} attempt, total loss undelivered after {} attempts, seeded half loss {}",
                            clean.attempts, lost.attempts, reproducible ? "reproducible" : "varies")};
}

// ---- 12 ----------------------------------------------------------------------

Verdict determinism(Fixtures& fx) {
    const auto& first = fx.reference_trace();
    const auto again = run_scenario(fx.reference, 1, fx.scenario_models());
    const bool traces = first.text == again.text && first.observations_csv == again.observations_csv;

    const auto dir = scratch_dir();
    const auto a = dir / "a.csv", b = dir / "b.csv";
    const bool ran = run_cli({"datagen", "--seed", "7", "--out", a.string()}).code == 0 &&
                     run_cli({"datagen", "--seed", "7", "--out", b.string()}).code == 0;
    const bool datasets = ran && slurp(a) == slurp(b) && !slurp(a).empty();
    fs::remove_all(dir);
    return {traces && datasets, fmt::format("trace {} bytes {}, datagen {}", first.text.size(),
                                            traces ? "identical" : "differs", datasets ? "identical" : "differs")};
}

// ---- 13 ----------------------------------------------------------------------

Verdict fusion(Fixtures& fx) {
    const auto& c = fx.reference;
    const auto rec = generate_synthetic(ablation_model(), ablation_schedule(), c.device.sample_rate_hz);
    const auto data = featurize(rec, c.pipeline);
    const std::vector<Channel> accel{Channel::Ax, Channel::Ay, Channel::Az};
    const std::vector<Channel> fused{Channel::Ax, Channel::Ay, Channel::Az, Channel::Stretch};
    const auto r = ablation_compare(data, {accel, fused}, c.pipeline, c.train);
    const double margin = r[1].accuracy_pct - r[0].accuracy_pct;
    return {r[1].accuracy_pct > r[0].accuracy_pct,
            fmt::format("accel {:.1f}%, accel+stretch {:.1f}%, margin {:+.1f} points", r[0].accuracy_pct,
                        r[1].accuracy_pct, margin)};
}

} // namespace

int main(int argc, char** argv) {
    std::optional<fs::path> data;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--data" && i + 1 < argc) {
            data = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--data recording.csv]\n";
            return 2;
        }
    }
    ::unsetenv("OPENHEALTH_SIM_SEED");

    Fixtures fx;
    const std::vector<std::pair<std::string, std::function<Verdict(Fixtures&)>>> criteria{
        {"classifier accuracy", [&](Fixtures& f) { return methodology(f, data); }},
        {"report formatting", report_formatting},
        {"gradient correctness", gradients},
        {"storage claim", storage},
        {"resource budgets", budgets},
        {"energy neutrality", energy_neutrality},
        {"power arithmetic", power_arithmetic},
        {"protocol suite", protocol},
        {"privacy invariant", privacy},
        {"sync accuracy", sync_accuracy},
        {"alert delivery", alerts},
        {"determinism", determinism},
        {"sensor fusion ordering", fusion},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        const auto start = std::chrono::steady_clock::now();
        try {
            v = criteria[i].second(fx);
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !v.pass;
        std::cout << fmt::format("{} {:>2} {}: {} ({:.1f} s)", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                                 v.detail, s)
                  << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
