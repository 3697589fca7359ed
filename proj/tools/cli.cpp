#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "openhealth/config.hpp"
#include "openhealth/dataset.hpp"
#include "openhealth/energy.hpp"
#include "openhealth/eval.hpp"
#include "openhealth/experiment.hpp"
#include "openhealth/memory.hpp"
#include "openhealth/model_io.hpp"
#include "openhealth/sim.hpp"
#include "openhealth/synthetic.hpp"
#include "openhealth/trace.hpp"

namespace openhealth::cli {

namespace {

// Raised for problems the user fixes by changing flags or config.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when input data is unusable.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string group_thousands(std::uint64_t v) {
    std::string digits = std::to_string(v);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i && (digits.size() - i) % 3 == 0)
            out += ',';
        out += digits[i];
    }
    return out;
}

void write_file(const std::string& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open " + path + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw DataError("write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Config config_or_default(const std::string& path) { return path.empty() ? default_config() : load_config(path); }

std::optional<AppKind> app_flag(const std::string& name) {
    if (name.empty())
        return std::nullopt;
    const auto app = parse_app(name);
    if (!app)
        throw UsageError("unknown app '" + name + "' (expected har or gesture)");
    return app;
}

std::vector<Channel> channels_flag(const std::string& list) {
    std::vector<Channel> out;
    if (list.empty())
        return out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto c = parse_channel(item);
        if (!c)
            throw UsageError("unknown channel '" + item + "'");
        out.push_back(*c);
    }
    return out;
}

// --seed, else OPENHEALTH_SIM_SEED, else the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag)
        return *flag;
    if (const char* env = std::getenv("OPENHEALTH_SIM_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string_view(env).size())
                return v;
        } catch (const std::exception&) {
        }
        throw UsageError(fmt::format("OPENHEALTH_SIM_SEED='{}' is not an unsigned integer", env));
    }
    return fallback;
}

WindowedData load_windows(const std::string& path, const PipelineConfig& pipeline) {
    const auto rec = read_dataset(path);
    auto data = featurize(rec, pipeline);
    return data;
}

void check_app(const WindowedData& data, std::optional<AppKind> wanted) {
    if (wanted && *wanted != data.app)
        throw DataError(fmt::format("dataset holds {} labels but --app {} was requested", app_name(data.app),
                                    app_name(*wanted)));
}

// Channels given on the command line, else the config's, else everything the
// data has; stretch is dropped when the data lacks it.
std::vector<Channel> pick_channels(const std::vector<Channel>& flag, const Config& config, bool with_stretch) {
    std::vector<Channel> base = flag;
    if (base.empty() && config.channels)
        base = *config.channels;
    std::vector<Channel> out;
    for (Channel c : base)
        if (c != Channel::Stretch || with_stretch)
            out.push_back(c);
    return out;
}

// ---- datagen ---------------------------------------------------------------

struct DatagenArgs {
    std::string config, out, app = "har";
    std::optional<std::uint64_t> seed;
};

int cmd_datagen(const DatagenArgs& a, std::ostream& out) {
    const auto config = config_or_default(a.config);
    const auto app = *app_flag(a.app);
    CorpusSpec corpus = config.synthetic.for_app(app);
    corpus.model.seed = resolve_seed(a.seed, corpus.model.seed);
    const auto rec = generate_synthetic(corpus.model, corpus.schedule(), config.device.sample_rate_hz);
    write_dataset(rec, a.out);
    out << fmt::format("wrote {} samples ({} annotations, seed {}) to {}\n", rec.samples.size(),
                       rec.annotations.size(), corpus.model.seed, a.out);
    return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data, app, out, config, channels;
    bool int8 = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const auto config = config_or_default(a.config);
    const auto wanted = app_flag(a.app);
    const auto data = load_windows(a.data, config.pipeline);
    check_app(data, wanted);
    const auto channels = pick_channels(channels_flag(a.channels), config, data.with_stretch);
    const auto result = channels.empty() ? run_experiment(data, config.pipeline, config.train)
                                         : run_experiment(data, config.pipeline, config.train, channels);
    const auto& history = result.trained.loss_history;
    for (std::size_t e = 0; e < history.size(); ++e)
        out << fmt::format("epoch {} loss {:.6f}\n", e, history[e]);
    const auto& model = result.trained.model;
    if (a.int8) {
        const auto blob = serialize_quantized(quantize(model));
        write_file(a.out, std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
    } else {
        save_model(model, a.out);
    }
    const auto s = model.sizes();
    out << fmt::format("model [{},{},{}] {} parameters, {} train / {} test windows\n", s.inputs, s.hidden, s.outputs,
                       model.parameter_count(), result.train_size, result.test_size);
    out << render_table(result.report);
    out << "saved " << a.out << "\n";
    return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string data, model, json, counts, app = "har", config, channels;
};

EvalReport report_from_count_list(AppKind app, const std::string& list) {
    std::vector<ClassScore> scores(class_count(app));
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        const auto slash = item.find('/');
        if (eq == std::string::npos || slash == std::string::npos || slash < eq)
            throw UsageError("counts entries look like Label=correct/total, got '" + item + "'");
        const auto label = parse_label(item.substr(0, eq));
        if (!label || app_of(*label) != app)
            throw UsageError(fmt::format("'{}' is not a {} label", item.substr(0, eq), app_name(app)));
        ClassScore sc;
        try {
            sc.correct = std::stoull(item.substr(eq + 1, slash - eq - 1));
            sc.total = std::stoull(item.substr(slash + 1));
        } catch (const std::exception&) {
            throw UsageError("bad counts in '" + item + "'");
        }
        if (sc.correct > sc.total)
            throw DataError("correct exceeds total in '" + item + "'");
        scores[static_cast<std::size_t>(label_encode(*label))] = sc;
    }
    return report_from_counts(app, std::move(scores));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    EvalReport report;
    if (!a.counts.empty()) {
        if (!a.data.empty() || !a.model.empty())
            throw UsageError("--counts cannot be combined with --data/--model");
        report = report_from_count_list(*app_flag(a.app), a.counts);
    } else {
        if (a.data.empty() || a.model.empty())
            throw UsageError("eval needs --data and --model (or --counts)");
        const auto config = config_or_default(a.config);
        const auto model = load_model(a.model);
        const auto data = load_windows(a.data, config.pipeline);
        auto channels = pick_channels(channels_flag(a.channels), config, data.with_stretch);
        const std::size_t inputs = model.sizes().inputs;
        if (channels.empty() && inputs == kMotionChannels * kFeaturesPerChannel && data.with_stretch)
            for (std::size_t c = 0; c < kMotionChannels; ++c)
                channels.push_back(static_cast<Channel>(c));
        const std::size_t have =
            (channels.empty() ? channel_count(data.with_stretch) : channels.size()) * kFeaturesPerChannel;
        if (have != inputs)
            throw DataError(fmt::format("model expects {} inputs, data yields {}", inputs, have));
        if (model.sizes().outputs != class_count(data.app))
            throw DataError(fmt::format("model has {} outputs, {} data has {} classes", model.sizes().outputs,
                                        app_name(data.app), class_count(data.app)));
        const auto examples = channels.empty() ? to_examples(data) : to_examples(data, channels);
        report = evaluate(model, examples, data.app);
    }
    out << render_table(report);
    if (!a.json.empty())
        write_file(a.json, report_to_json(report).dump(2) + "\n");
    return kExitOk;
}

// ---- budget ----------------------------------------------------------------

struct BudgetArgs {
    std::string config, app = "har";
    std::optional<double> rate;
    std::optional<unsigned> storage_channels;
    unsigned bytes_per_scalar = 2;
};

int cmd_budget(const BudgetArgs& a, std::ostream& out) {
    const auto config = config_or_default(a.config);
    const auto app = *app_flag(a.app);
    const bool stretch = config.synthetic.for_app(app).model.with_stretch;
    std::size_t channels = channel_count(stretch);
    if (config.channels)
        channels = pick_channels({}, config, stretch).size();
    const auto sizes = layers_for(app, channels, config.pipeline.hidden_units);

    MemoryLedger m;
    try {
        m = memory_footprint(config.pipeline.window, channels, sizes, true, config.device);
    } catch (const MemoryBudgetError& e) {
        throw UsageError(fmt::format("{} budget: {}", e.budget(), e.what()));
    }
    const auto& p = config.device;
    out << fmt::format("app {}: window {} x {} channels, model [{},{},{}]\n", app_name(app), config.pipeline.window,
                       channels, sizes.inputs, sizes.hidden, sizes.outputs);
    out << fmt::format("sram  {} / {} bytes ({} free)\n", m.sram_used_bytes, p.sram_bytes,
                       p.sram_bytes - m.sram_used_bytes);
    out << fmt::format("  sample buffer {}  features {}  activations {}  stack {}\n", m.sample_buffer_bytes,
                       m.feature_bytes, m.activation_bytes, m.stack_bytes);
    out << fmt::format("flash {} / {} bytes ({} free)\n", m.flash_used_bytes, p.flash_bytes,
                       p.flash_bytes - m.flash_used_bytes);
    out << fmt::format("  model blob {}  code {}\n", m.model_bytes, m.code_bytes);

    const double rate = a.rate.value_or(p.sample_rate_hz);
    const unsigned raw_channels = a.storage_channels.value_or(static_cast<unsigned>(channel_count(stretch)));
    double bytes = 0;
    try {
        bytes = storage_budget(rate, raw_channels, a.bytes_per_scalar, 3600.0);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    out << fmt::format("raw storage {:g} Hz x {} channels x {} bytes = {} bytes/hour\n", rate, raw_channels,
                       a.bytes_per_scalar, group_thousands(static_cast<std::uint64_t>(std::llround(bytes))));

    const double active = active_power_mw(p, app);
    const auto plan = plan_duty_cycle(config.energy.harvest, std::max(active, p.p_tx_mw), p.p_sleep_mw,
                                      config.energy.battery, config.energy.plan);
    double harvest = 0;
    for (double h : config.energy.harvest.slot_mw)
        harvest += config.energy.battery.mppt_efficiency * h;
    double duty = 0;
    for (double f : plan.active_fraction)
        duty += f;
    out << fmt::format("energy/day always active {:.3f} mWh, always asleep {:.3f} mWh\n", active * 24.0,
                       p.p_sleep_mw * 24.0);
    out << fmt::format("energy/day harvest {:.3f} mWh, planned {:.3f} mWh, budget {:.3f} mWh, mean duty {:.2f}%{}\n",
                       harvest, plan.planned_mwh, plan.budget_mwh, 100.0 * duty / kSlotsPerDay,
                       plan.feasible ? "" : " (infeasible)");
    return kExitOk;
}

// ---- simulate / replay -----------------------------------------------------

struct SimulateArgs {
    std::string config, trace, metrics, device_log, observations;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> duration_ms;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    auto config = config_or_default(a.config);
    if (a.duration_ms) {
        if (*a.duration_ms <= 0)
            throw UsageError("--duration-ms must be positive");
        config.scenario.duration_ms = *a.duration_ms;
    }
    const auto seed = resolve_seed(a.seed, 1);
    SimTrace trace;
    try {
        trace = run_scenario(config, seed);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!a.trace.empty())
        write_file(a.trace, trace.text);
    if (!a.metrics.empty())
        write_file(a.metrics, trace.metrics.dump(2) + "\n");
    if (!a.device_log.empty())
        write_file(a.device_log, device_log_csv(trace.text));
    if (!a.observations.empty())
        write_file(a.observations, trace.observations_csv);

    out << fmt::format("seed {}  duration {} ms\n", seed, config.scenario.duration_ms);
    for (const auto& [id, d] : trace.metrics["devices"].items())
        out << fmt::format("device {} ({}): frames sent {} received {} lost {} rejected {}; inferences {} "
                           "({:.1f}% correct); alerts {}/{} delivered; battery {:.3f} -> {:.3f} mWh\n",
                           id, d["app"].get<std::string>(), d["frames_sent"].get<long>(),
                           d["frames_received"].get<long>(), d["frames_lost"].get<long>(),
                           d["frames_rejected"].get<long>(), d["inferences"].get<long>(),
                           d["accuracy_pct"].get<double>(), d["alerts_delivered"].get<long>(),
                           d["alerts_raised"].get<long>(), d["battery_start_mwh"].get<double>(),
                           d["battery_end_mwh"].get<double>());
    return kExitOk;
}

struct ReplayArgs {
    std::string trace;
    std::vector<std::string> skip;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
    ReplayOptions opt;
    for (const auto& s : a.skip) {
        if (s == "energy")
            opt.energy = false;
        else if (s == "sequence")
            opt.sequence = false;
        else if (s == "canary")
            opt.canary = false;
        else if (s == "completeness")
            opt.completeness = false;
        else
            throw UsageError("unknown check '" + s + "'");
    }
    ReplayReport r;
    try {
        r = replay(read_file(a.trace), opt);
    } catch (const TraceVersionError& e) {
        throw DataError(e.what());
    }
    for (const auto& w : r.warnings)
        out << "warning: " << w << "\n";
    for (const auto& [check, ok] : r.checks)
        out << (ok ? "PASS " : "FAIL ") << check << "\n";
    for (const auto& f : r.failures)
        out << fmt::format("  {} line {}: {}\n", f.check, f.line, f.message);
    return r.passed ? kExitOk : kExitData;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"openhealth: wearable activity-recognition toolkit"};
    app.require_subcommand(1);

    DatagenArgs dg;
    auto* datagen = app.add_subcommand("datagen", "Generate a synthetic labeled recording");
    datagen->add_option("--config", dg.config, "JSON config");
    datagen->add_option("--out", dg.out, "Output dataset CSV")->required();
    datagen->add_option("--seed", dg.seed, "Generator seed (default: config, or OPENHEALTH_SIM_SEED)");
    datagen->add_option("--app", dg.app, "har or gesture");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a dataset CSV");
    train_cmd->add_option("--data", tr.data, "Dataset CSV")->required();
    train_cmd->add_option("--app", tr.app, "har or gesture (checked against the data)");
    train_cmd->add_option("--out", tr.out, "Output model file")->required();
    train_cmd->add_option("--config", tr.config, "JSON config");
    train_cmd->add_option("--channels", tr.channels, "Comma-separated channel subset");
    train_cmd->add_flag("--int8", tr.int8, "Write the quantized OHQ1 model");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Render an accuracy report");
    eval_cmd->add_option("--data", ev.data, "Dataset CSV");
    eval_cmd->add_option("--model", ev.model, "Model file (OHM1 or OHQ1)");
    eval_cmd->add_option("--json", ev.json, "Also write the report as JSON");
    eval_cmd->add_option("--counts", ev.counts, "Label=correct/total,... instead of data and model");
    eval_cmd->add_option("--app", ev.app, "Label set for --counts");
    eval_cmd->add_option("--config", ev.config, "JSON config");
    eval_cmd->add_option("--channels", ev.channels, "Comma-separated channel subset");

    BudgetArgs bu;
    auto* budget = app.add_subcommand("budget", "Memory, storage and energy budgets");
    budget->add_option("--config", bu.config, "JSON config");
    budget->add_option("--app", bu.app, "har or gesture");
    budget->add_option("--rate", bu.rate, "Sample rate for the raw-storage line (Hz)");
    budget->add_option("--storage-channels", bu.storage_channels, "Channels for the raw-storage line");
    budget->add_option("--bytes-per-scalar", bu.bytes_per_scalar, "Bytes per stored value");

    SimulateArgs si;
    auto* simulate = app.add_subcommand("simulate", "Run the scenario");
    simulate->add_option("--config", si.config, "JSON config");
    simulate->add_option("--seed", si.seed, "Scenario seed (default: OPENHEALTH_SIM_SEED, else 1)");
    simulate->add_option("--trace", si.trace, "Write the trace file");
    simulate->add_option("--metrics", si.metrics, "Write the metrics JSON");
    simulate->add_option("--device-log", si.device_log, "Write the per-device CSV log");
    simulate->add_option("--observations", si.observations, "Write the host observation CSV");
    simulate->add_option("--duration-ms", si.duration_ms, "Override the scenario duration");

    ReplayArgs re;
    auto* replay_cmd = app.add_subcommand("replay", "Re-check a trace file");
    replay_cmd->add_option("--trace", re.trace, "Trace file")->required();
    replay_cmd->add_option("--skip", re.skip, "Checks to skip: energy, sequence, canary, completeness")
        ->delimiter(',');

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (datagen->parsed())
            return cmd_datagen(dg, out);
        if (train_cmd->parsed())
            return cmd_train(tr, out);
        if (eval_cmd->parsed())
            return cmd_eval(ev, out);
        if (budget->parsed())
            return cmd_budget(bu, out);
        if (simulate->parsed())
            return cmd_simulate(si, out);
        if (replay_cmd->parsed())
            return cmd_replay(re, out);
    } catch (const ConfigError& e) {
        err << "config error:\n";
        for (const auto& p : e.problems())
            err << "  " << p << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DegenerateDataset& e) {
        err << "degenerate dataset: " << e.what() << "\n";
        return kExitData;
    } catch (const EmptyTestSet& e) {
        err << "empty test set: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DatasetError& e) {
        err << "dataset error: " << e.what() << "\n";
        return kExitData;
    } catch (const InvalidRecording& e) {
        err << "invalid recording: " << e.what() << "\n";
        return kExitData;
    } catch (const ModelFormatError& e) {
        err << "model error: " << e.what() << "\n";
        return kExitData;
    } catch (const TraceFormatError& e) {
        err << "trace error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

} // namespace openhealth::cli
