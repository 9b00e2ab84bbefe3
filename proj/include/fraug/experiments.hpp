#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fraug/augment.hpp"
#include "fraug/dataset.hpp"
#include "fraug/forecaster.hpp"

namespace fraug {

enum class Protocol { LongTerm, ColdStart, Ttt };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& name);

struct ExperimentOptions {
    std::string dataset_id;
    std::size_t lookback = 96;
    std::vector<std::size_t> horizons{96};
    std::vector<AugmentKind> kinds{AugmentKind::FreqMask};
    std::vector<double> rate_grid{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    TrainConfig train;
    AugmentSpec augment;  // template: sharing flag, keep_top, period, ...
    int jobs = 1;

    // Cold start.
    double fraction = 0.01;
    std::vector<std::size_t> factors{2, 50};

    // Test-time training.
    std::size_t parts = 20;
    std::size_t max_copies = 5;
    bool warm_start = false;
};

struct RateScore {
    double rate = 0.0;
    std::size_t factor = 1;
    Metrics val;
};

struct SeedResult {
    std::uint64_t seed = 0;
    double rate = 0.0;
    std::size_t factor = 1;
    Metrics val;
    Metrics test;
    TrainTrace trace;
    std::vector<RateScore> candidates;
    DLinearModel model;  // the selected model
};

struct ExperimentCell {
    AugmentKind kind = AugmentKind::None;
    std::size_t horizon = 0;
    std::vector<SeedResult> per_seed;
    double median_test_mse = 0.0;
    double median_test_mae = 0.0;
    double chosen_rate = 0.0;
    std::size_t chosen_factor = 1;
};

struct TttCurve {
    AugmentKind kind = AugmentKind::None;
    std::size_t horizon = 0;
    double rate = 0.0;  // the template rate if set, else the smallest grid rate
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<double>> per_seed_losses;  // [seed][part-1]
    std::vector<double> median_losses;                 // per part, median over seeds
    std::vector<double> mean_loss_per_seed;
    double median_mean_loss = 0.0;
    // copy_schedules[i-1] is the per-part copy count used when training for
    // test part i (oldest part first). Empty for the control.
    std::vector<std::vector<std::size_t>> copy_schedules;
    std::vector<DLinearModel> final_models;  // per seed, after the last round
};

struct ExperimentReport {
    Protocol protocol = Protocol::LongTerm;
    std::string dataset_id;
    std::size_t lookback = 0;
    std::vector<std::size_t> horizons;
    std::vector<double> rate_grid;
    std::vector<std::uint64_t> seeds;
    bool shared_mask_across_channels = true;
    double fraction = 0.0;
    std::size_t parts = 0;
    std::vector<ExperimentCell> cells;
    std::vector<TttCurve> ttt;
    double wall_clock_seconds = 0.0;

    const ExperimentCell* find(AugmentKind kind, std::size_t horizon) const;
    const TttCurve* find_ttt(AugmentKind kind, std::size_t horizon) const;
};

// True for kinds whose behaviour depends on the rate.
bool uses_rate(AugmentKind kind) noexcept;

double median(std::vector<double> values);

struct RateSelection {
    double best_rate = 0.0;
    std::vector<RateScore> scores;
    TrainResult best;
};

// Trains one model per grid rate and keeps the one with the lowest
// validation MSE; ties go to the smaller rate.
RateSelection cross_validate_rate(std::span<const WindowSample> train_set, std::span<const WindowSample> val_set,
                                  AugmentKind kind, const std::vector<double>& grid, const TrainConfig& cfg,
                                  const AugmentSpec& aug_template);
RateSelection cross_validate_rate(const TimeSeriesDataset& ds, std::size_t b, std::size_t h, AugmentKind kind,
                                  const std::vector<double>& grid, const TrainConfig& cfg,
                                  const AugmentSpec& aug_template);

// `ds` must already be split and normalized.
ExperimentReport run_longterm(const TimeSeriesDataset& ds, const ExperimentOptions& opts);
ExperimentReport run_coldstart(const TimeSeriesDataset& ds, const ExperimentOptions& opts);
// `ds` is the raw series; each round z-scores with the first part's stats.
ExperimentReport run_ttt(const TimeSeriesDataset& ds, const ExperimentOptions& opts);

// Augmented copies per part, oldest first: round-half-up of
// 1 + (max_copies-1) * rank/(n-1); a single part gets max_copies.
std::vector<std::size_t> ttt_copy_schedule(std::size_t parts_seen, std::size_t max_copies = 5);

// [begin, end) of each of `parts` equal contiguous spans; the last span takes
// the remainder.
std::vector<std::pair<std::size_t, std::size_t>> partition_series(std::size_t length, std::size_t parts);

std::string report_json(const ExperimentReport& report);
std::string report_text(const ExperimentReport& report);
// Long format: kind,horizon,seed,epoch,train_loss,val_loss
std::string trace_csv(const ExperimentReport& report);
// Long format: kind,horizon,seed,part,test_mse
std::string ttt_parts_csv(const ExperimentReport& report);

}  // namespace fraug
