#include "fraug/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <optional>

#include "fraug/error.hpp"
#include "fraug/kernels.hpp"

namespace fraug {
namespace {

std::vector<double> normalized_grid(std::vector<double> grid) {
    if (grid.empty()) throw Error("rate grid is empty");
    for (double r : grid)
        if (!(r >= 0.0 && r <= 1.0)) throw Error("rate grid values must lie in [0, 1]");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::vector<AugmentKind> with_control(const std::vector<AugmentKind>& kinds) {
    std::vector<AugmentKind> out{AugmentKind::None};
    for (auto k : kinds)
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    return out;
}

// Runs independent tasks on up to `jobs` threads; rethrows the first failure.
void run_tasks(std::vector<std::function<void()>>& tasks, int jobs) {
    std::exception_ptr failure;
    const int threads = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tasks.size()); ++i) {
        try {
            tasks[static_cast<std::size_t>(i)]();
        } catch (...) {
#pragma omp critical(fraug_task_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

// ASD is a dataset-level augmentation: the pool is expanded once before
// training. Everything else is applied batch-wise inside `train`.
TrainResult train_with(std::span<const WindowSample> train_set, std::span<const WindowSample> val_set,
                       const TrainConfig& cfg, const AugmentSpec& spec) {
    if (spec.kind == AugmentKind::Asd) {
        Rng rng(derive_seed(spec.seed, 0x415344ULL, 0));
        const auto expanded = expand_dataset(train_set, spec, 2, rng);
        return train(expanded, val_set, cfg, AugmentSpec{});
    }
    return train(train_set, val_set, cfg, spec);
}

AugmentSpec spec_for(const AugmentSpec& tmpl, AugmentKind kind, double rate, std::uint64_t seed) {
    AugmentSpec s = tmpl;
    s.kind = kind;
    s.rate = rate;
    s.seed = seed;
    if ((kind == AugmentKind::FreqMix || kind == AugmentKind::FreqMaskThenMix) && rate > 0.5) s.rate = 0.5;
    return s;
}

void summarize(ExperimentCell& cell) {
    std::vector<double> mse, mae;
    std::map<double, std::size_t> rate_votes;
    std::map<std::size_t, std::size_t> factor_votes;
    for (const auto& s : cell.per_seed) {
        mse.push_back(s.test.mse);
        mae.push_back(s.test.mae);
        ++rate_votes[s.rate];
        ++factor_votes[s.factor];
    }
    cell.median_test_mse = median(mse);
    cell.median_test_mae = median(mae);
    // Most frequent choice across seeds; ties resolve to the smaller value.
    auto mode = [](const auto& votes) {
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it)
            if (it->second > best->second) best = it;
        return best->first;
    };
    cell.chosen_rate = mode(rate_votes);
    cell.chosen_factor = mode(factor_votes);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentReport report_header(Protocol p, const ExperimentOptions& opts) {
    ExperimentReport r;
    r.protocol = p;
    r.dataset_id = opts.dataset_id;
    r.lookback = opts.lookback;
    r.horizons = opts.horizons;
    r.rate_grid = normalized_grid(opts.rate_grid);
    r.seeds = opts.seeds;
    r.shared_mask_across_channels = opts.augment.shared_mask_across_channels;
    if (opts.seeds.empty()) throw Error("at least one seed is required");
    if (opts.horizons.empty()) throw Error("at least one horizon is required");
    return r;
}

}  // namespace

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::LongTerm: return "longterm";
        case Protocol::ColdStart: return "coldstart";
        case Protocol::Ttt: return "ttt";
    }
    return "longterm";
}

Protocol parse_protocol(const std::string& name) {
    if (name == "longterm") return Protocol::LongTerm;
    if (name == "coldstart") return Protocol::ColdStart;
    if (name == "ttt") return Protocol::Ttt;
    throw Error("unknown protocol '" + name + "' (expected longterm, coldstart or ttt)");
}

const ExperimentCell* ExperimentReport::find(AugmentKind kind, std::size_t horizon) const {
    for (const auto& c : cells)
        if (c.kind == kind && c.horizon == horizon) return &c;
    return nullptr;
}

const TttCurve* ExperimentReport::find_ttt(AugmentKind kind, std::size_t horizon) const {
    for (const auto& c : ttt)
        if (c.kind == kind && c.horizon == horizon) return &c;
    return nullptr;
}

bool uses_rate(AugmentKind kind) noexcept {
    switch (kind) {
        case AugmentKind::FreqMask:
        case AugmentKind::FreqMix:
        case AugmentKind::FreqMaskKeepDominant:
        case AugmentKind::FreqMaskThenMix:
        case AugmentKind::TimeMaskRandom:
        case AugmentKind::TimeMaskSegment:
        case AugmentKind::Warp: return true;
        default: return false;
    }
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RateSelection cross_validate_rate(std::span<const WindowSample> train_set, std::span<const WindowSample> val_set,
                                  AugmentKind kind, const std::vector<double>& grid, const TrainConfig& cfg,
                                  const AugmentSpec& aug_template) {
    auto rates = normalized_grid(grid);
    if (!uses_rate(kind)) rates.resize(1);
    if (kind == AugmentKind::FreqMix || kind == AugmentKind::FreqMaskThenMix) {
        std::erase_if(rates, [](double r) { return r > 0.5; });
        if (rates.empty()) throw Error("mix rates must not exceed 0.5; grid has no admissible rate");
    }
    RateSelection sel;
    std::size_t best = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        auto result = train_with(train_set, val_set, cfg, spec_for(aug_template, kind, rates[i], aug_template.seed));
        const Metrics val = evaluate(result.model, val_set);
        sel.scores.push_back({rates[i], 1, val});
        // Strict comparison: rates ascend, so ties keep the smaller one.
        if (i == 0 || val.mse < sel.scores[best].val.mse) {
            best = i;
            sel.best = std::move(result);
        }
    }
    sel.best_rate = sel.scores[best].rate;
    return sel;
}

RateSelection cross_validate_rate(const TimeSeriesDataset& ds, std::size_t b, std::size_t h, AugmentKind kind,
                                  const std::vector<double>& grid, const TrainConfig& cfg,
                                  const AugmentSpec& aug_template) {
    const auto train_set = make_windows(ds, Split::Train, b, h);
    const auto val_set = make_windows(ds, Split::Val, b, h);
    return cross_validate_rate(train_set, val_set, kind, grid, cfg, aug_template);
}

ExperimentReport run_longterm(const TimeSeriesDataset& ds, const ExperimentOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report = report_header(Protocol::LongTerm, opts);
    const auto kinds = with_control(opts.kinds);

    struct Windows {
        std::vector<WindowSample> train, val, test;
    };
    std::vector<Windows> windows;
    for (auto h : opts.horizons)
        windows.push_back({make_windows(ds, Split::Train, opts.lookback, h), make_windows(ds, Split::Val, opts.lookback, h),
                           make_windows(ds, Split::Test, opts.lookback, h)});

    for (auto h : opts.horizons)
        for (auto k : kinds) report.cells.push_back({k, h, std::vector<SeedResult>(opts.seeds.size()), 0, 0, 0, 1});

    std::vector<std::function<void()>> tasks;
    for (std::size_t hi = 0; hi < opts.horizons.size(); ++hi)
        for (std::size_t ki = 0; ki < kinds.size(); ++ki)
            for (std::size_t si = 0; si < opts.seeds.size(); ++si)
                tasks.emplace_back([&, hi, ki, si] {
                    const auto& w = windows[hi];
                    TrainConfig cfg = opts.train;
                    cfg.seed = opts.seeds[si];
                    AugmentSpec tmpl = opts.augment;
                    tmpl.seed = opts.seeds[si];
                    SeedResult& out = report.cells[hi * kinds.size() + ki].per_seed[si];
                    out.seed = opts.seeds[si];
                    if (kinds[ki] == AugmentKind::None) {
                        auto result = train(w.train, w.val, cfg, AugmentSpec{});
                        out.val = evaluate(result.model, w.val);
                        out.test = evaluate(result.model, w.test);
                        out.trace = std::move(result.trace);
                        out.model = std::move(result.model);
                        return;
                    }
                    auto sel = cross_validate_rate(w.train, w.val, kinds[ki], report.rate_grid, cfg, tmpl);
                    out.rate = sel.best_rate;
                    out.candidates = sel.scores;
                    out.val = evaluate(sel.best.model, w.val);
                    out.test = evaluate(sel.best.model, w.test);
                    out.trace = std::move(sel.best.trace);
                    out.model = std::move(sel.best.model);
                });
    run_tasks(tasks, opts.jobs);

    for (auto& cell : report.cells) summarize(cell);
    report.wall_clock_seconds = seconds_since(start);
    return report;
}

ExperimentReport run_coldstart(const TimeSeriesDataset& ds, const ExperimentOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report = report_header(Protocol::ColdStart, opts);
    report.fraction = opts.fraction;
    if (opts.factors.empty()) throw Error("at least one expansion factor is required");
    const auto kinds = with_control(opts.kinds);

    struct Windows {
        std::vector<WindowSample> train, val, test;
    };
    std::vector<Windows> windows;
    for (auto h : opts.horizons) {
        const auto full = make_windows(ds, Split::Train, opts.lookback, h);
        windows.push_back({take_last_fraction(full, opts.fraction), make_windows(ds, Split::Val, opts.lookback, h),
                           make_windows(ds, Split::Test, opts.lookback, h)});
    }
    for (auto h : opts.horizons)
        for (auto k : kinds) report.cells.push_back({k, h, std::vector<SeedResult>(opts.seeds.size()), 0, 0, 0, 1});

    auto factors = opts.factors;
    std::sort(factors.begin(), factors.end());

    std::vector<std::function<void()>> tasks;
    for (std::size_t hi = 0; hi < opts.horizons.size(); ++hi)
        for (std::size_t ki = 0; ki < kinds.size(); ++ki)
            for (std::size_t si = 0; si < opts.seeds.size(); ++si)
                tasks.emplace_back([&, hi, ki, si] {
                    const auto& w = windows[hi];
                    const auto seed = opts.seeds[si];
                    TrainConfig cfg = opts.train;
                    cfg.seed = seed;
                    SeedResult& out = report.cells[hi * kinds.size() + ki].per_seed[si];
                    out.seed = seed;
                    const AugmentKind kind = kinds[ki];

                    if (kind == AugmentKind::None) {
                        auto result = train(w.train, w.val, cfg, AugmentSpec{});
                        out.val = evaluate(result.model, w.val);
                        out.test = evaluate(result.model, w.test);
                        out.trace = std::move(result.trace);
                        out.model = std::move(result.model);
                        return;
                    }
                    auto rates = report.rate_grid;
                    if (!uses_rate(kind)) rates.resize(1);
                    bool have = false;
                    TrainResult best;
                    for (auto factor : factors) {
                        for (std::size_t ri = 0; ri < rates.size(); ++ri) {
                            if ((kind == AugmentKind::FreqMix || kind == AugmentKind::FreqMaskThenMix) &&
                                rates[ri] > 0.5)
                                continue;
                            const auto spec = spec_for(opts.augment, kind, rates[ri], seed);
                            Rng rng(derive_seed(seed, factor, ri));
                            const auto expanded = expand_dataset(w.train, spec, factor, rng);
                            auto result = train(expanded, w.val, cfg, AugmentSpec{});
                            const Metrics val = evaluate(result.model, w.val);
                            out.candidates.push_back({rates[ri], factor, val});
                            if (!have || val.mse < out.val.mse) {
                                have = true;
                                out.val = val;
                                out.rate = rates[ri];
                                out.factor = factor;
                                best = std::move(result);
                            }
                        }
                    }
                    out.test = evaluate(best.model, w.test);
                    out.trace = std::move(best.trace);
                    out.model = std::move(best.model);
                });
    run_tasks(tasks, opts.jobs);

    for (auto& cell : report.cells) summarize(cell);
    report.wall_clock_seconds = seconds_since(start);
    return report;
}

std::vector<std::size_t> ttt_copy_schedule(std::size_t parts_seen, std::size_t max_copies) {
    if (parts_seen == 0) return {};
    if (max_copies < 1) throw Error("max_copies must be at least 1");
    if (parts_seen == 1) return {max_copies};
    std::vector<std::size_t> out(parts_seen);
    const double span = static_cast<double>(max_copies - 1);
    for (std::size_t r = 0; r < parts_seen; ++r) {
        const double x = 1.0 + span * static_cast<double>(r) / static_cast<double>(parts_seen - 1);
        out[r] = static_cast<std::size_t>(std::floor(x + 0.5 + 1e-12));
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> partition_series(std::size_t length, std::size_t parts) {
    if (parts < 1) throw Error("need at least one part");
    const std::size_t size = length / parts;
    if (size == 0) throw Error("series of length " + std::to_string(length) + " cannot form " + std::to_string(parts) + " parts");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t p = 0; p < parts; ++p) out.emplace_back(p * size, p + 1 == parts ? length : (p + 1) * size);
    return out;
}

ExperimentReport run_ttt(const TimeSeriesDataset& ds, const ExperimentOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report = report_header(Protocol::Ttt, opts);
    report.parts = opts.parts;
    if (opts.parts < 2) throw Error("test-time training needs at least two parts");
    const auto kinds = with_control(opts.kinds);
    const auto spans = partition_series(ds.length(), opts.parts);

    // z-score with the statistics of the first part only.
    const auto normalized = split_and_normalize(ds, SplitBounds{spans[0].second, spans[1].second, spans[1].second});

    for (auto h : opts.horizons) {
        for (std::size_t p = 0; p < spans.size(); ++p)
            if (spans[p].second - spans[p].first < opts.lookback + h + 1)
                throw Error("part " + std::to_string(p) + " (length " + std::to_string(spans[p].second - spans[p].first) +
                            ") is too short for windows of " + std::to_string(opts.lookback + h));
        for (auto k : kinds) {
            TttCurve curve;
            curve.kind = k;
            curve.horizon = h;
            curve.seeds = opts.seeds;
            curve.rate = k == AugmentKind::None ? 0.0 : (opts.augment.rate > 0.0 ? opts.augment.rate : report.rate_grid.front());
            curve.per_seed_losses.assign(opts.seeds.size(), std::vector<double>(opts.parts - 1, 0.0));
            curve.final_models.resize(opts.seeds.size());
            if (k != AugmentKind::None)
                for (std::size_t i = 1; i < opts.parts; ++i) curve.copy_schedules.push_back(ttt_copy_schedule(i, opts.max_copies));
            report.ttt.push_back(std::move(curve));
        }
    }

    std::vector<std::function<void()>> tasks;
    for (std::size_t hi = 0; hi < opts.horizons.size(); ++hi)
        for (std::size_t ki = 0; ki < kinds.size(); ++ki)
            for (std::size_t si = 0; si < opts.seeds.size(); ++si)
                tasks.emplace_back([&, hi, ki, si] {
                    const std::size_t h = opts.horizons[hi];
                    const std::size_t b = opts.lookback;
                    const auto seed = opts.seeds[si];
                    TttCurve& curve = report.ttt[hi * kinds.size() + ki];
                    TrainConfig cfg = opts.train;
                    cfg.seed = seed;
                    const auto spec = spec_for(opts.augment, kinds[ki], curve.rate, seed);

                    std::vector<std::vector<WindowSample>> part_windows;
                    for (const auto& [begin, end] : spans)
                        part_windows.push_back(make_windows(normalized.values, begin, end, b, h));

                    std::optional<DLinearModel> previous;
                    for (std::size_t i = 1; i < opts.parts; ++i) {
                        std::vector<WindowSample> train_set;
                        std::vector<std::size_t> part_of;
                        for (std::size_t p = 0; p < i; ++p)
                            for (const auto& w : part_windows[p]) {
                                train_set.push_back(w);
                                part_of.push_back(p);
                            }
                        const std::size_t originals = train_set.size();
                        if (kinds[ki] != AugmentKind::None) {
                            const auto& schedule = curve.copy_schedules[i - 1];
                            const std::uint64_t master = derive_seed(seed, i, 0x545454ULL);
                            for (std::size_t round = 1; round <= opts.max_copies; ++round) {
                                std::vector<std::size_t> idx;
                                for (std::size_t j = 0; j < originals; ++j)
                                    if (schedule[part_of[j]] >= round) idx.push_back(j);
                                if (idx.empty()) continue;
                                auto extra = kernels::augment_batch(std::span(train_set.data(), originals), idx, spec,
                                                                    master, round);
                                std::move(extra.begin(), extra.end(), std::back_inserter(train_set));
                            }
                        }
                        const auto& val_set = part_windows[i - 1];
                        TrainResult result;
                        if (opts.warm_start && previous)
                            result = train(*previous, train_set, val_set, cfg, AugmentSpec{});
                        else
                            result = train(train_set, val_set, cfg, AugmentSpec{});
                        curve.per_seed_losses[si][i - 1] = evaluate(result.model, part_windows[i]).mse;
                        previous = std::move(result.model);
                    }
                    curve.final_models[si] = std::move(*previous);
                });
    run_tasks(tasks, opts.jobs);

    for (auto& curve : report.ttt) {
        curve.median_losses.assign(opts.parts - 1, 0.0);
        for (std::size_t p = 0; p + 1 < opts.parts; ++p) {
            std::vector<double> v;
            for (const auto& s : curve.per_seed_losses) v.push_back(s[p]);
            curve.median_losses[p] = median(v);
        }
        for (const auto& s : curve.per_seed_losses) {
            double sum = 0.0;
            for (double x : s) sum += x;
            curve.mean_loss_per_seed.push_back(sum / static_cast<double>(s.size()));
        }
        curve.median_mean_loss = median(curve.mean_loss_per_seed);
    }
    report.wall_clock_seconds = seconds_since(start);
    return report;
}

}  // namespace fraug
