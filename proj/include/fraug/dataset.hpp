#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fraug/matrix.hpp"

namespace fraug {

struct NormStats {
    double mean = 0.0;
    double std = 1.0;
};

// Split boundaries over the raw series: train = [0, train_end),
// val = [train_end, val_end), test = [val_end, test_end).
struct SplitBounds {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t test_end = 0;
};

enum class SplitScheme { EttHourly, EttMinute, Ratio };

enum class Split { Train, Val, Test, All };

struct TimeSeriesDataset {
    std::vector<std::string> names;
    Matrix values;  // C x T_total
    std::vector<std::string> timestamps;
    std::string date_column = "date";
    std::vector<NormStats> norm_stats;  // empty until normalized
    std::optional<SplitBounds> bounds;

    std::size_t channels() const noexcept { return values.rows(); }
    std::size_t length() const noexcept { return values.cols(); }
};

// One aligned (look-back, horizon) pair. Rows are channels.
struct WindowSample {
    Matrix lookback;  // C x b
    Matrix horizon;   // C x h
    std::size_t start_index = 0;

    std::size_t channels() const noexcept { return lookback.rows(); }
    std::size_t lookback_len() const noexcept { return lookback.cols(); }
    std::size_t horizon_len() const noexcept { return horizon.cols(); }
    bool same_shape(const WindowSample& o) const noexcept {
        return lookback.same_shape(o.lookback) && horizon.same_shape(o.horizon);
    }

    friend bool operator==(const WindowSample&, const WindowSample&) = default;
};

// Channel c of lookback||horizon.
std::vector<double> concatenated(const WindowSample& sample, std::size_t channel);
// Inverse of `concatenated`: writes the first b values to the look-back row
// and the remainder to the horizon row.
void assign_concatenated(WindowSample& sample, std::size_t channel, const std::vector<double>& series);

TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& date_column = "date");
void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path);

SplitScheme parse_split_scheme(const std::string& name);
std::string to_string(SplitScheme scheme);
SplitBounds split_bounds(SplitScheme scheme, std::size_t total_len);

// z-scores every channel with statistics of the training span of `bounds`.
TimeSeriesDataset split_and_normalize(const TimeSeriesDataset& ds, const SplitBounds& bounds);
TimeSeriesDataset split_and_normalize(const TimeSeriesDataset& ds, SplitScheme scheme);

// Half-open [begin, end) of the raw series a split's windows are cut from.
// Validation and test spans start b points early so their horizons tile the
// split itself.
std::pair<std::size_t, std::size_t> split_span(const TimeSeriesDataset& ds, Split split, std::size_t b);

// Windows from [begin, end). Produces exactly (end - begin) - b - h windows
// (stride 1); the final alignable window is not emitted.
std::vector<WindowSample> make_windows(const Matrix& values, std::size_t begin, std::size_t end, std::size_t b,
                                       std::size_t h, std::size_t stride = 1);
std::vector<WindowSample> make_windows(const TimeSeriesDataset& ds, Split split, std::size_t b, std::size_t h,
                                       std::size_t stride = 1);

// Last floor(fraction * n) samples (at least one), order preserved.
std::vector<WindowSample> take_last_fraction(const std::vector<WindowSample>& samples, double fraction);
std::size_t last_fraction_count(std::size_t n, double fraction);

}  // namespace fraug
