// fraug: command-line front end.
//
//   fraug synth    --out series.csv [--length N --channels C --tone P:A ...]
//   fraug augment  --in series.csv --kind freq_mask --rate 0.3 --seed 7 --out augmented.csv
//   fraug spectrum --in series.csv [--start S --length L] [--out spectrum.csv]
//   fraug train    --dataset ETTh1.csv --horizon 96 [--kind freq_mask --rate 0.2] --out runs/x
//   fraug run      --config longterm.json [overrides]

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "fraug/augment.hpp"
#include "fraug/dataset.hpp"
#include "fraug/error.hpp"
#include "fraug/experiments.hpp"
#include "fraug/forecaster.hpp"
#include "fraug/run_config.hpp"
#include "fraug/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Tone {
    double period = 24.0;
    double amplitude = 1.0;
};

Tone parse_tone(const std::string& text) {
    const auto colon = text.find(':');
    Tone t;
    try {
        t.period = std::stod(text.substr(0, colon));
        if (colon != std::string::npos) t.amplitude = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw fraug::Error("bad --tone '" + text + "' (expected PERIOD[:AMPLITUDE])");
    }
    if (!(t.period > 0)) throw fraug::Error("tone period must be positive");
    return t;
}

std::string timestamp(std::int64_t minutes_since_start) {
    using namespace std::chrono;
    const sys_days base = year{2016} / July / 1;
    const auto tp = sys_seconds(base) + minutes(minutes_since_start);
    const auto day = floor<days>(tp);
    const year_month_day ymd(day);
    const hh_mm_ss hms(tp - day);
    std::ostringstream out;
    out << std::setfill('0') << static_cast<int>(ymd.year()) << '-' << std::setw(2)
        << static_cast<unsigned>(ymd.month()) << '-' << std::setw(2) << static_cast<unsigned>(ymd.day()) << ' '
        << std::setw(2) << hms.hours().count() << ':' << std::setw(2) << hms.minutes().count() << ":00";
    return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw fraug::Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw fraug::Error("failed writing '" + path.string() + "'");
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
    json manifest{{"toolkit", "fraug"}, {"version", fraug::kToolkitVersion}, {"command", command}, {"config", config}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    fs::path out;
    std::size_t length = 1000;
    std::size_t channels = 1;
    std::vector<std::string> tones{"24:1"};
    double noise = 0.0;
    double trend = 0.0;
    long long shift_at = -1;
    double shift = 0.0;
    std::uint64_t seed = 0;
    int freq_minutes = 60;
};

void cmd_synth(const SynthArgs& a) {
    if (a.length < 1 || a.channels < 1) throw fraug::Error("length and channels must be at least 1");
    std::vector<Tone> tones;
    for (const auto& t : a.tones) tones.push_back(parse_tone(t));

    fraug::TimeSeriesDataset ds;
    for (std::size_t c = 0; c + 1 < a.channels; ++c) ds.names.push_back("x" + std::to_string(c));
    ds.names.push_back("OT");
    ds.values = fraug::Matrix(a.channels, a.length);
    fraug::Rng rng(a.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t t = 0; t < a.length; ++t) {
        ds.timestamps.push_back(timestamp(static_cast<std::int64_t>(t) * a.freq_minutes));
        for (std::size_t c = 0; c < a.channels; ++c) {
            double v = a.trend * static_cast<double>(t);
            const double phase = 0.5 * static_cast<double>(c);
            for (const auto& tone : tones)
                v += tone.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / tone.period + phase);
            if (a.shift_at >= 0 && static_cast<long long>(t) >= a.shift_at) v += a.shift;
            if (a.noise > 0) v += a.noise * gauss(rng);
            ds.values(c, t) = v;
        }
    }
    fraug::write_csv(ds, a.out);
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
    fs::path in, out, dump_spectrum;
    std::string date_column = "date";
    std::string kind = "freq_mask";
    double rate = 0.2;
    std::uint64_t seed = 0;
    std::size_t lookback = 96, horizon = 96, stride = 0, keep_top = 10;
    bool per_channel_mask = false;
};

void cmd_augment(const AugmentArgs& a) {
    const auto ds = fraug::load_csv(a.in, a.date_column);
    const std::size_t stride = a.stride == 0 ? a.lookback + a.horizon : a.stride;
    const auto windows = fraug::make_windows(ds.values, 0, ds.length(), a.lookback, a.horizon, stride);
    if (windows.empty()) throw fraug::Error("series is too short for a single window");

    fraug::AugmentSpec spec;
    spec.kind = fraug::parse_augment_kind(a.kind);
    spec.rate = a.rate;
    spec.seed = a.seed;
    spec.keep_top = a.keep_top;
    spec.shared_mask_across_channels = !a.per_channel_mask;
    fraug::validate(spec);
    fraug::Rng rng(a.seed);
    const auto expanded = fraug::expand_dataset(windows, spec, 2, rng);
    const std::span<const fraug::WindowSample> augmented(expanded.data() + windows.size(), windows.size());

    std::ofstream out(a.out);
    if (!out) throw fraug::Error("cannot write '" + a.out.string() + "'");
    out << "sample,start,step";
    for (const auto& n : ds.names) out << ',' << n;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < augmented.size(); ++i) {
        const auto& w = augmented[i];
        for (std::size_t t = 0; t < a.lookback + a.horizon; ++t) {
            out << i << ',' << w.start_index << ',' << t;
            for (std::size_t c = 0; c < w.channels(); ++c)
                out << ',' << (t < a.lookback ? w.lookback(c, t) : w.horizon(c, t - a.lookback));
            out << '\n';
        }
    }
    if (!out) throw fraug::Error("failed writing '" + a.out.string() + "'");

    if (!a.dump_spectrum.empty()) {
        std::ofstream spec_out(a.dump_spectrum);
        if (!spec_out) throw fraug::Error("cannot write '" + a.dump_spectrum.string() + "'");
        std::vector<std::vector<double>> original, changed;
        for (std::size_t c = 0; c < ds.channels(); ++c) {
            original.push_back(fraug::amplitude_spectrum(fraug::rfft(fraug::concatenated(windows[0], c))));
            changed.push_back(fraug::amplitude_spectrum(fraug::rfft(fraug::concatenated(augmented[0], c))));
        }
        spec_out << "bin";
        for (const auto& n : ds.names) spec_out << ',' << n << "_original," << n << "_augmented";
        spec_out << '\n' << std::setprecision(17);
        for (std::size_t k = 0; k < original[0].size(); ++k) {
            spec_out << k;
            for (std::size_t c = 0; c < ds.channels(); ++c) spec_out << ',' << original[c][k] << ',' << changed[c][k];
            spec_out << '\n';
        }
    }
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
    fs::path in, out;
    std::string date_column = "date";
    std::size_t start = 0, length = 0;
};

void cmd_spectrum(const SpectrumArgs& a) {
    const auto ds = fraug::load_csv(a.in, a.date_column);
    if (a.start >= ds.length()) throw fraug::Error("--start lies beyond the series");
    const std::size_t len = a.length == 0 ? ds.length() - a.start : a.length;
    if (a.start + len > ds.length()) throw fraug::Error("--start + --length exceeds the series");
    std::vector<std::vector<double>> amp;
    for (std::size_t c = 0; c < ds.channels(); ++c)
        amp.push_back(fraug::amplitude_spectrum(fraug::rfft(ds.values.row(c).subspan(a.start, len))));

    std::ostringstream text;
    text << "bin,frequency";
    for (const auto& n : ds.names) text << ',' << n;
    text << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < amp[0].size(); ++k) {
        text << k << ',' << static_cast<double>(k) / static_cast<double>(len);
        for (const auto& col : amp) text << ',' << col[k];
        text << '\n';
    }
    if (a.out.empty())
        std::cout << text.str();
    else
        write_text(a.out, text.str());
}

// ---------------------------------------------------------------- train / run

struct Overrides {
    fs::path config;
    std::string protocol, dataset, scheme, out, kind_single;
    std::vector<std::size_t> horizons;
    std::vector<std::string> kinds;
    std::vector<std::uint64_t> seeds;
    std::vector<double> grid;
    double rate = -1.0, fraction = -1.0, lr = -1.0;
    int jobs = 0;
    long long epochs = -1, batch_size = -1, patience = -1, lookback = -1;
};

json merged_config(const Overrides& o) {
    json doc = o.config.empty() ? json::object() : fraug::load_json_file(o.config);
    if (!doc.is_object()) throw fraug::Error("config error at /: expected an object");
    if (!o.protocol.empty()) doc["protocol"] = o.protocol;
    if (!o.dataset.empty()) doc["dataset"]["path"] = o.dataset;
    if (!o.scheme.empty()) doc["dataset"]["scheme"] = o.scheme;
    if (!o.out.empty()) doc["out"] = o.out;
    if (!o.horizons.empty()) doc["horizons"] = o.horizons;
    if (!o.kinds.empty()) doc["augment"]["kinds"] = o.kinds;
    if (!o.seeds.empty()) doc["seeds"] = o.seeds;
    if (!o.grid.empty()) doc["augment"]["rate_grid"] = o.grid;
    if (o.rate >= 0) {
        doc["augment"]["rate"] = o.rate;
        if (o.grid.empty()) doc["augment"]["rate_grid"] = {o.rate};
    }
    if (o.fraction >= 0) doc["coldstart"]["fraction"] = o.fraction;
    if (o.lr >= 0) doc["train"]["learning_rate"] = o.lr;
    if (o.epochs >= 0) doc["train"]["max_epochs"] = o.epochs;
    if (o.batch_size >= 0) doc["train"]["batch_size"] = o.batch_size;
    if (o.patience >= 0) doc["train"]["patience"] = o.patience;
    if (o.lookback >= 0) doc["lookback"] = o.lookback;
    if (o.jobs > 0) doc["jobs"] = o.jobs;
    return doc;
}

fraug::TimeSeriesDataset load_dataset(fraug::RunConfig& cfg) {
    fraug::validate(cfg);
    const auto scheme = fraug::resolve_scheme(cfg);
    if (cfg.options.augment.period == 0) cfg.options.augment.period = fraug::default_period(scheme);
    return fraug::load_csv(cfg.dataset_path, cfg.date_column);
}

void write_run_outputs(const fraug::RunConfig& cfg, const std::string& command, const fraug::ExperimentReport& report) {
    fs::create_directories(cfg.out_dir);
    write_manifest(cfg.out_dir, command, fraug::to_json(cfg));
    write_text(cfg.out_dir / "report.json", fraug::report_json(report) + "\n");
    write_text(cfg.out_dir / "report.txt", fraug::report_text(report));
    write_text(cfg.out_dir / "trace.csv", fraug::trace_csv(report));
    if (report.protocol == fraug::Protocol::Ttt) write_text(cfg.out_dir / "ttt_parts.csv", fraug::ttt_parts_csv(report));

    const auto ckpt_dir = cfg.out_dir / "checkpoints";
    fs::create_directories(ckpt_dir);
    auto ckpt_name = [](fraug::AugmentKind k, std::size_t h, std::uint64_t seed) {
        return fraug::to_string(k) + "_h" + std::to_string(h) + "_seed" + std::to_string(seed) + ".json";
    };
    for (const auto& cell : report.cells)
        for (const auto& s : cell.per_seed) {
            fraug::TrainConfig tc = cfg.options.train;
            tc.seed = s.seed;
            fraug::save_checkpoint(s.model, tc, ckpt_dir / ckpt_name(cell.kind, cell.horizon, s.seed));
        }
    for (const auto& curve : report.ttt)
        for (std::size_t i = 0; i < curve.seeds.size(); ++i) {
            fraug::TrainConfig tc = cfg.options.train;
            tc.seed = curve.seeds[i];
            fraug::save_checkpoint(curve.final_models[i], tc, ckpt_dir / ckpt_name(curve.kind, curve.horizon, curve.seeds[i]));
        }
}

void cmd_run(const Overrides& o) {
    auto cfg = fraug::parse_run_config(merged_config(o));
    auto raw = load_dataset(cfg);
    fraug::ExperimentReport report;
    switch (cfg.protocol) {
        case fraug::Protocol::LongTerm:
            report = fraug::run_longterm(fraug::split_and_normalize(raw, fraug::resolve_scheme(cfg)), cfg.options);
            break;
        case fraug::Protocol::ColdStart:
            report = fraug::run_coldstart(fraug::split_and_normalize(raw, fraug::resolve_scheme(cfg)), cfg.options);
            break;
        case fraug::Protocol::Ttt: report = fraug::run_ttt(raw, cfg.options); break;
    }
    write_run_outputs(cfg, "run", report);
    std::cout << fraug::report_text(report);
}

// Single training run: first horizon, first kind, one seed.
void cmd_train(const Overrides& o) {
    Overrides adjusted = o;
    if (!o.kind_single.empty()) adjusted.kinds = {o.kind_single};
    auto cfg = fraug::parse_run_config(merged_config(adjusted));
    auto raw = load_dataset(cfg);
    const auto ds = fraug::split_and_normalize(raw, fraug::resolve_scheme(cfg));
    const auto& opts = cfg.options;
    const std::size_t h = opts.horizons.front();
    const auto train_set = fraug::make_windows(ds, fraug::Split::Train, opts.lookback, h);
    const auto val_set = fraug::make_windows(ds, fraug::Split::Val, opts.lookback, h);
    const auto test_set = fraug::make_windows(ds, fraug::Split::Test, opts.lookback, h);

    fraug::TrainConfig tc = opts.train;
    tc.seed = opts.seeds.front();
    fraug::AugmentSpec spec = opts.augment;
    spec.kind = opts.kinds.empty() ? fraug::AugmentKind::None : opts.kinds.front();
    spec.rate = opts.augment.rate > 0 ? opts.augment.rate : (fraug::uses_rate(spec.kind) ? opts.rate_grid.front() : 0.0);
    spec.seed = tc.seed;

    std::vector<fraug::WindowSample> pool = train_set;
    fraug::AugmentSpec batch_spec = spec;
    if (spec.kind == fraug::AugmentKind::Asd) {
        fraug::Rng rng(spec.seed);
        pool = fraug::expand_dataset(train_set, spec, 2, rng);
        batch_spec = {};
    }
    const auto result = fraug::train(pool, val_set, tc, batch_spec);
    const auto val = fraug::evaluate(result.model, val_set);
    const auto test = fraug::evaluate(result.model, test_set);

    fs::create_directories(cfg.out_dir);
    write_manifest(cfg.out_dir, "train", fraug::to_json(cfg));
    fraug::save_checkpoint(result.model, tc, cfg.out_dir / "checkpoint.json");

    fraug::ExperimentReport report;
    report.dataset_id = opts.dataset_id;
    report.lookback = opts.lookback;
    report.horizons = {h};
    report.seeds = {tc.seed};
    report.rate_grid = {spec.rate};
    fraug::ExperimentCell cell{spec.kind, h, {}, test.mse, test.mae, spec.rate, 1};
    cell.per_seed.push_back({tc.seed, spec.rate, 1, val, test, result.trace, {}, result.model});
    report.cells.push_back(cell);
    write_text(cfg.out_dir / "report.json", fraug::report_json(report) + "\n");
    write_text(cfg.out_dir / "trace.csv", fraug::trace_csv(report));
    std::cout << "val mse " << val.mse << "  test mse " << test.mse << "  test mae " << test.mae << "  epochs "
              << result.trace.epochs.size() << '\n';
}

void add_run_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--protocol", o.protocol, "longterm | coldstart | ttt");
    cmd->add_option("--dataset", o.dataset, "Dataset CSV");
    cmd->add_option("--scheme", o.scheme, "auto | ett-hourly | ett-minute | ratio");
    cmd->add_option("--horizon", o.horizons, "Forecast horizon(s)");
    cmd->add_option("--lookback", o.lookback, "Look-back length");
    cmd->add_option("--rate", o.rate, "Fixed augmentation rate (replaces the grid)");
    cmd->add_option("--grid", o.grid, "Rate grid for validation selection");
    cmd->add_option("--seed", o.seeds, "Seed(s)");
    cmd->add_option("--fraction", o.fraction, "Cold-start training fraction");
    cmd->add_option("--epochs", o.epochs, "Maximum epochs");
    cmd->add_option("--lr", o.lr, "Learning rate");
    cmd->add_option("--batch-size", o.batch_size, "Batch size");
    cmd->add_option("--patience", o.patience, "Early-stopping patience");
    cmd->add_option("--jobs", o.jobs, "Concurrent experiment cells");
    cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-domain augmentation toolkit for time-series forecasting"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Write a synthetic sinusoid-mixture CSV");
    s->add_option("--out", synth.out, "Output CSV")->required();
    s->add_option("--length", synth.length, "Number of time steps");
    s->add_option("--channels", synth.channels, "Number of channels");
    s->add_option("--tone", synth.tones, "PERIOD[:AMPLITUDE], repeatable");
    s->add_option("--noise", synth.noise, "Gaussian noise standard deviation");
    s->add_option("--trend", synth.trend, "Linear trend per step");
    s->add_option("--shift-at", synth.shift_at, "Step at which a mean shift starts");
    s->add_option("--shift", synth.shift, "Mean shift size");
    s->add_option("--seed", synth.seed, "Noise seed");
    s->add_option("--freq-minutes", synth.freq_minutes, "Timestamp spacing in minutes");

    AugmentArgs aug;
    auto* a = app.add_subcommand("augment", "Augment every window of a series");
    a->add_option("--in", aug.in, "Input CSV")->required();
    a->add_option("--out", aug.out, "Augmented windows CSV")->required();
    a->add_option("--kind", aug.kind, "Augmentation kind");
    a->add_option("--rate", aug.rate, "Mask / mix rate");
    a->add_option("--seed", aug.seed, "Seed");
    a->add_option("--lookback", aug.lookback, "Look-back length");
    a->add_option("--horizon", aug.horizon, "Horizon length");
    a->add_option("--stride", aug.stride, "Window stride (default lookback+horizon)");
    a->add_option("--keep-top", aug.keep_top, "Dominant bins exempt from masking");
    a->add_flag("--per-channel-mask", aug.per_channel_mask, "Draw an independent mask per channel");
    a->add_option("--date-column", aug.date_column, "Name of the date column");
    a->add_option("--dump-spectrum", aug.dump_spectrum, "Write amplitude spectra of the first window");

    SpectrumArgs spec;
    auto* sp = app.add_subcommand("spectrum", "Amplitude spectrum of a series segment");
    sp->add_option("--in", spec.in, "Input CSV")->required();
    sp->add_option("--out", spec.out, "Output CSV (stdout if omitted)");
    sp->add_option("--start", spec.start, "First step");
    sp->add_option("--length", spec.length, "Segment length (default: to the end)");
    sp->add_option("--date-column", spec.date_column, "Name of the date column");

    Overrides train_o;
    auto* t = app.add_subcommand("train", "Train one DLinear model and write a checkpoint");
    add_run_flags(t, train_o);
    t->add_option("--kind", train_o.kind_single, "Augmentation kind (default none)");

    Overrides run_o;
    auto* r = app.add_subcommand("run", "Run an experiment protocol");
    add_run_flags(r, run_o);
    r->add_option("--kind", run_o.kinds, "Augmentation kind(s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*s) cmd_synth(synth);
        if (*a) cmd_augment(aug);
        if (*sp) cmd_spectrum(spec);
        if (*t) {
            if (train_o.kind_single.empty()) train_o.kind_single = "none";
            cmd_train(train_o);
        }
        if (*r) cmd_run(run_o);
    } catch (const fraug::Error& e) {
        std::cerr << "fraug: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fraug: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
