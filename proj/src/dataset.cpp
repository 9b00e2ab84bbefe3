#include "fraug/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fraug/error.hpp"

namespace fraug {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(pos)));
            break;
        }
        fields.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return fields;
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace

std::vector<double> concatenated(const WindowSample& sample, std::size_t channel) {
    const auto lb = sample.lookback.row(channel);
    const auto hz = sample.horizon.row(channel);
    std::vector<double> out;
    out.reserve(lb.size() + hz.size());
    out.insert(out.end(), lb.begin(), lb.end());
    out.insert(out.end(), hz.begin(), hz.end());
    return out;
}

void assign_concatenated(WindowSample& sample, std::size_t channel, const std::vector<double>& series) {
    auto lb = sample.lookback.row(channel);
    auto hz = sample.horizon.row(channel);
    std::copy_n(series.begin(), lb.size(), lb.begin());
    std::copy_n(series.begin() + static_cast<std::ptrdiff_t>(lb.size()), hz.size(), hz.begin());
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& date_column) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error("dataset file '" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);

    std::size_t date_index = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == date_column) date_index = i;
    if (date_index == header.size())
        throw Error("date column '" + date_column + "' not found in header of '" + path.string() + "'");
    if (header.size() < 2) throw Error("'" + path.string() + "' has no numeric columns");

    TimeSeriesDataset ds;
    ds.date_column = date_column;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != date_index) ds.names.emplace_back(header[i]);

    const std::size_t c = ds.names.size();
    std::vector<std::vector<double>> columns(c);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << path.string() << ": row " << row << " has " << fields.size() << " fields, expected "
                << header.size();
            throw Error(msg.str());
        }
        std::size_t ch = 0;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == date_index) {
                ds.timestamps.emplace_back(fields[i]);
                continue;
            }
            double v = 0.0;
            if (!parse_double(fields[i], v)) {
                std::ostringstream msg;
                msg << path.string() << ": row " << row << ", column '" << ds.names[ch] << "': cannot parse '"
                    << fields[i] << "' as a number";
                throw Error(msg.str());
            }
            columns[ch++].push_back(v);
        }
    }
    const std::size_t t = columns.front().size();
    if (t == 0) throw Error("'" + path.string() + "' contains no data rows");
    ds.values = Matrix(c, t);
    for (std::size_t ch = 0; ch < c; ++ch) std::copy(columns[ch].begin(), columns[ch].end(), ds.values.row(ch).begin());
    return ds;
}

void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << ds.date_column;
    for (const auto& name : ds.names) out << ',' << name;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t t = 0; t < ds.length(); ++t) {
        out << (t < ds.timestamps.size() ? ds.timestamps[t] : std::to_string(t));
        for (std::size_t c = 0; c < ds.channels(); ++c) out << ',' << ds.values(c, t);
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

SplitScheme parse_split_scheme(const std::string& name) {
    if (name == "ett-hourly") return SplitScheme::EttHourly;
    if (name == "ett-minute") return SplitScheme::EttMinute;
    if (name == "ratio") return SplitScheme::Ratio;
    throw Error("unknown split scheme '" + name + "' (expected ett-hourly, ett-minute or ratio)");
}

std::string to_string(SplitScheme scheme) {
    switch (scheme) {
        case SplitScheme::EttHourly: return "ett-hourly";
        case SplitScheme::EttMinute: return "ett-minute";
        case SplitScheme::Ratio: return "ratio";
    }
    return "ratio";
}

SplitBounds split_bounds(SplitScheme scheme, std::size_t total_len) {
    SplitBounds b;
    if (scheme == SplitScheme::Ratio) {
        b.train_end = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(total_len)));
        const auto test_len = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(total_len)));
        b.val_end = total_len - test_len;
        b.test_end = total_len;
    } else {
        // 12/4/4 months of 30 days.
        const std::size_t per_month = scheme == SplitScheme::EttHourly ? 30 * 24 : 30 * 24 * 4;
        b.train_end = 12 * per_month;
        b.val_end = 16 * per_month;
        b.test_end = 20 * per_month;
        if (b.test_end > total_len)
            throw Error("series of length " + std::to_string(total_len) + " is too short for scheme " +
                        to_string(scheme) + " (needs " + std::to_string(b.test_end) + ")");
    }
    if (!(0 < b.train_end && b.train_end < b.val_end && b.val_end < b.test_end))
        throw Error("series of length " + std::to_string(total_len) + " is too short to split");
    return b;
}

TimeSeriesDataset split_and_normalize(const TimeSeriesDataset& ds, const SplitBounds& bounds) {
    if (!(0 < bounds.train_end && bounds.train_end < bounds.val_end && bounds.val_end <= ds.length() &&
          bounds.val_end <= bounds.test_end && bounds.test_end <= ds.length()))
        throw Error("invalid split bounds for series of length " + std::to_string(ds.length()));

    TimeSeriesDataset out = ds;
    out.bounds = bounds;
    out.norm_stats.assign(ds.channels(), {});
    const auto n = static_cast<double>(bounds.train_end);
    for (std::size_t c = 0; c < ds.channels(); ++c) {
        const auto row = ds.values.row(c);
        double mean = 0.0;
        for (std::size_t t = 0; t < bounds.train_end; ++t) mean += row[t];
        mean /= n;
        double var = 0.0;
        for (std::size_t t = 0; t < bounds.train_end; ++t) var += (row[t] - mean) * (row[t] - mean);
        const double sd = std::sqrt(var / n);
        if (!(sd > 1e-12)) throw Error("degenerate channel '" + ds.names[c] + "' (zero training std)");
        out.norm_stats[c] = {mean, sd};
        auto dst = out.values.row(c);
        for (double& v : dst) v = (v - mean) / sd;
    }
    return out;
}

TimeSeriesDataset split_and_normalize(const TimeSeriesDataset& ds, SplitScheme scheme) {
    return split_and_normalize(ds, split_bounds(scheme, ds.length()));
}

std::pair<std::size_t, std::size_t> split_span(const TimeSeriesDataset& ds, Split split, std::size_t b) {
    if (split == Split::All) return {0, ds.length()};
    if (!ds.bounds) throw Error("dataset has not been split");
    const auto& bd = *ds.bounds;
    switch (split) {
        case Split::Train: return {0, bd.train_end};
        case Split::Val: return {bd.train_end >= b ? bd.train_end - b : 0, bd.val_end};
        case Split::Test: return {bd.val_end >= b ? bd.val_end - b : 0, bd.test_end};
        case Split::All: break;
    }
    return {0, ds.length()};
}

std::vector<WindowSample> make_windows(const Matrix& values, std::size_t begin, std::size_t end, std::size_t b,
                                       std::size_t h, std::size_t stride) {
    if (b < 1 || h < 1) throw Error("look-back and horizon must be at least 1");
    if (stride < 1) throw Error("stride must be at least 1");
    if (end > values.cols() || begin > end) throw Error("window span outside series");
    const std::size_t len = end - begin;
    if (b + h > len) throw Error("window exceeds split");

    const std::size_t c = values.rows();
    std::vector<WindowSample> out;
    out.reserve((len - b - h) / stride + 1);
    for (std::size_t s = 0; s < len - b - h; s += stride) {
        WindowSample w{Matrix(c, b), Matrix(c, h), begin + s};
        for (std::size_t ch = 0; ch < c; ++ch) {
            const auto src = values.row(ch).subspan(begin + s);
            std::copy_n(src.begin(), b, w.lookback.row(ch).begin());
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(b), h, w.horizon.row(ch).begin());
        }
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<WindowSample> make_windows(const TimeSeriesDataset& ds, Split split, std::size_t b, std::size_t h,
                                       std::size_t stride) {
    const auto [begin, end] = split_span(ds, split, b);
    return make_windows(ds.values, begin, end, b, h, stride);
}

std::size_t last_fraction_count(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("fraction must be in (0, 1]");
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<WindowSample> take_last_fraction(const std::vector<WindowSample>& samples, double fraction) {
    if (samples.empty()) throw Error("no samples to take a fraction of");
    const std::size_t k = last_fraction_count(samples.size(), fraction);
    return {samples.end() - static_cast<std::ptrdiff_t>(k), samples.end()};
}

}  // namespace fraug
