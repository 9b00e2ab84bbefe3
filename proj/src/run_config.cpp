#include "fraug/run_config.hpp"

#include <fstream>

#include "fraug/error.hpp"

namespace fraug {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error("config error at " + path + ": " + what);
}

// Rejects keys absent from the defaults so typos do not pass silently.
void check_keys(const json& doc, const json& defaults, const std::string& path) {
    if (!doc.is_object()) fail(path.empty() ? "/" : path, "expected an object");
    for (const auto& [key, value] : doc.items()) {
        const std::string sub = path + "/" + key;
        if (!defaults.contains(key)) fail(sub, "unknown key");
        if (value.is_null()) fail(sub, "must not be null");
        if (defaults.at(key).is_object()) check_keys(value, defaults.at(key), sub);
    }
}

template <typename T>
T get(const json& doc, const std::string& pointer) {
    const auto& node = doc.at(json::json_pointer(pointer));
    try {
        return node.get<T>();
    } catch (const json::exception&) {
        fail(pointer, "has the wrong type (" + std::string(node.type_name()) + ")");
    }
}

std::size_t get_positive(const json& doc, const std::string& pointer) {
    const auto& node = doc.at(json::json_pointer(pointer));
    if (!node.is_number_integer() || node.get<long long>() < 1) fail(pointer, "must be an integer >= 1");
    return node.get<std::size_t>();
}

std::size_t get_count(const json& doc, const std::string& pointer) {
    const auto& node = doc.at(json::json_pointer(pointer));
    if (!node.is_number_integer() || node.get<long long>() < 0) fail(pointer, "must be an integer >= 0");
    return node.get<std::size_t>();
}

}  // namespace

json default_config_json() {
    return json{
        {"protocol", "longterm"},
        {"dataset", {{"path", ""}, {"date_column", "date"}, {"scheme", "auto"}, {"id", ""}}},
        {"lookback", 96},
        {"horizons", {96}},
        {"augment",
         {{"kinds", {"freq_mask"}},
          {"rate_grid", {0.1, 0.2, 0.3, 0.4, 0.5}},
          {"rate", 0.0},
          {"shared_mask", true},
          {"exact_count", false},
          {"keep_top", 10},
          {"noise_bound", 0.05},
          {"period", 0},
          {"block_len", 0},
          {"asd_k", 5},
          {"asd_pool", 64}}},
        {"train",
         {{"learning_rate", 5e-3}, {"batch_size", 32}, {"max_epochs", 20}, {"patience", 3}, {"kernel", 25}}},
        {"seeds", {1, 2, 3}},
        {"coldstart", {{"fraction", 0.01}, {"factors", {2, 50}}}},
        {"ttt", {{"parts", 20}, {"max_copies", 5}, {"warm_start", false}}},
        {"jobs", 1},
        {"out", "runs/latest"},
    };
}

RunConfig parse_run_config(const json& doc) {
    const json defaults = default_config_json();
    check_keys(doc, defaults, "");
    json merged = defaults;
    merged.merge_patch(doc);

    RunConfig cfg;
    cfg.protocol = [&] {
        try {
            return parse_protocol(get<std::string>(merged, "/protocol"));
        } catch (const Error& e) {
            if (std::string(e.what()).rfind("config error", 0) == 0) throw;
            fail("/protocol", e.what());
        }
    }();
    cfg.dataset_path = get<std::string>(merged, "/dataset/path");
    cfg.date_column = get<std::string>(merged, "/dataset/date_column");
    cfg.scheme = get<std::string>(merged, "/dataset/scheme");
    if (cfg.scheme != "auto") {
        try {
            parse_split_scheme(cfg.scheme);
        } catch (const Error& e) {
            fail("/dataset/scheme", e.what());
        }
    }
    auto& o = cfg.options;
    o.dataset_id = get<std::string>(merged, "/dataset/id");
    if (o.dataset_id.empty()) o.dataset_id = cfg.dataset_path.stem().string();
    o.lookback = get_positive(merged, "/lookback");
    o.horizons.clear();
    const auto& horizons = merged.at("horizons");
    if (!horizons.is_array() || horizons.empty()) fail("/horizons", "must be a non-empty array");
    for (std::size_t i = 0; i < horizons.size(); ++i) o.horizons.push_back(get_positive(merged, "/horizons/" + std::to_string(i)));

    o.kinds.clear();
    const auto& kinds = merged.at("augment").at("kinds");
    if (!kinds.is_array()) fail("/augment/kinds", "must be an array");
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const std::string ptr = "/augment/kinds/" + std::to_string(i);
        try {
            o.kinds.push_back(parse_augment_kind(get<std::string>(merged, ptr)));
        } catch (const Error& e) {
            if (std::string(e.what()).rfind("config error", 0) == 0) throw;
            fail(ptr, e.what());
        }
    }
    o.rate_grid = get<std::vector<double>>(merged, "/augment/rate_grid");
    if (o.rate_grid.empty()) fail("/augment/rate_grid", "must not be empty");
    for (double r : o.rate_grid)
        if (!(r >= 0.0 && r <= 1.0)) fail("/augment/rate_grid", "values must lie in [0, 1]");
    o.augment.rate = get<double>(merged, "/augment/rate");
    if (!(o.augment.rate >= 0.0 && o.augment.rate <= 1.0)) fail("/augment/rate", "must lie in [0, 1]");
    o.augment.shared_mask_across_channels = get<bool>(merged, "/augment/shared_mask");
    o.augment.exact_count = get<bool>(merged, "/augment/exact_count");
    o.augment.keep_top = get_count(merged, "/augment/keep_top");
    o.augment.noise_bound = get<double>(merged, "/augment/noise_bound");
    if (!(o.augment.noise_bound >= 0.0)) fail("/augment/noise_bound", "must be >= 0");
    o.augment.period = get_count(merged, "/augment/period");
    if (o.augment.period == 1) fail("/augment/period", "must be 0 (auto) or >= 2");
    o.augment.block_len = get_count(merged, "/augment/block_len");
    o.augment.asd_k = get_positive(merged, "/augment/asd_k");
    o.augment.asd_pool = get_count(merged, "/augment/asd_pool");

    o.train.learning_rate = get<double>(merged, "/train/learning_rate");
    if (!(o.train.learning_rate > 0.0)) fail("/train/learning_rate", "must be > 0");
    o.train.batch_size = get_positive(merged, "/train/batch_size");
    o.train.max_epochs = get_count(merged, "/train/max_epochs");
    o.train.patience = get_positive(merged, "/train/patience");
    o.train.kernel = get_positive(merged, "/train/kernel");
    if (o.train.kernel % 2 == 0) fail("/train/kernel", "must be odd");

    o.seeds = get<std::vector<std::uint64_t>>(merged, "/seeds");
    if (o.seeds.empty()) fail("/seeds", "must not be empty");
    o.fraction = get<double>(merged, "/coldstart/fraction");
    if (!(o.fraction > 0.0 && o.fraction <= 1.0)) fail("/coldstart/fraction", "must lie in (0, 1]");
    o.factors = get<std::vector<std::size_t>>(merged, "/coldstart/factors");
    if (o.factors.empty()) fail("/coldstart/factors", "must not be empty");
    for (auto f : o.factors)
        if (f < 1) fail("/coldstart/factors", "values must be >= 1");
    o.parts = get_positive(merged, "/ttt/parts");
    if (o.parts < 2) fail("/ttt/parts", "must be >= 2");
    o.max_copies = get_positive(merged, "/ttt/max_copies");
    o.warm_start = get<bool>(merged, "/ttt/warm_start");
    o.jobs = static_cast<int>(get_positive(merged, "/jobs"));
    cfg.out_dir = get<std::string>(merged, "/out");
    return cfg;
}

json to_json(const RunConfig& cfg) {
    const auto& o = cfg.options;
    json kinds = json::array();
    for (auto k : o.kinds) kinds.push_back(to_string(k));
    return json{
        {"protocol", to_string(cfg.protocol)},
        {"dataset",
         {{"path", cfg.dataset_path.string()}, {"date_column", cfg.date_column}, {"scheme", cfg.scheme}, {"id", o.dataset_id}}},
        {"lookback", o.lookback},
        {"horizons", o.horizons},
        {"augment",
         {{"kinds", kinds},
          {"rate_grid", o.rate_grid},
          {"rate", o.augment.rate},
          {"shared_mask", o.augment.shared_mask_across_channels},
          {"exact_count", o.augment.exact_count},
          {"keep_top", o.augment.keep_top},
          {"noise_bound", o.augment.noise_bound},
          {"period", o.augment.period},
          {"block_len", o.augment.block_len},
          {"asd_k", o.augment.asd_k},
          {"asd_pool", o.augment.asd_pool}}},
        {"train",
         {{"learning_rate", o.train.learning_rate},
          {"batch_size", o.train.batch_size},
          {"max_epochs", o.train.max_epochs},
          {"patience", o.train.patience},
          {"kernel", o.train.kernel}}},
        {"seeds", o.seeds},
        {"coldstart", {{"fraction", o.fraction}, {"factors", o.factors}}},
        {"ttt", {{"parts", o.parts}, {"max_copies", o.max_copies}, {"warm_start", o.warm_start}}},
        {"jobs", o.jobs},
        {"out", cfg.out_dir.string()},
    };
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) fail("/dataset/path", "is required");
    if (!std::filesystem::exists(cfg.dataset_path))
        fail("/dataset/path", "dataset file '" + cfg.dataset_path.string() + "' does not exist");
}

SplitScheme resolve_scheme(const RunConfig& cfg) {
    if (cfg.scheme != "auto") return parse_split_scheme(cfg.scheme);
    const auto name = cfg.dataset_path.filename().string();
    if (name.rfind("ETTh", 0) == 0) return SplitScheme::EttHourly;
    if (name.rfind("ETTm", 0) == 0) return SplitScheme::EttMinute;
    return SplitScheme::Ratio;
}

std::size_t default_period(SplitScheme scheme) {
    return scheme == SplitScheme::EttMinute ? 96 : 24;
}

}  // namespace fraug
