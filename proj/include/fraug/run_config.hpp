#pragma once

#include <filesystem>
#include <string>

#include "fraug/experiments.hpp"
#include "json.hpp"

namespace fraug {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Fully resolved settings of one CLI invocation.
struct RunConfig {
    Protocol protocol = Protocol::LongTerm;
    std::filesystem::path dataset_path;
    std::string date_column = "date";
    std::string scheme = "auto";  // auto | ett-hourly | ett-minute | ratio
    ExperimentOptions options;
    std::filesystem::path out_dir = "runs/latest";
};

// Defaults for every key, in the config file layout.
nlohmann::json default_config_json();

// Parses a config document layered over the defaults. Unknown keys and bad
// values throw fraug::Error naming the JSON pointer of the offending key.
RunConfig parse_run_config(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json load_json_file(const std::filesystem::path& path);

// Checks that referenced paths exist and value ranges hold.
void validate(const RunConfig& cfg);

// "auto" resolves from the file name: ETTh* hourly, ETTm* 15-minute,
// anything else the 70/10/20 ratio split.
SplitScheme resolve_scheme(const RunConfig& cfg);

// Default decomposition period for the resolved scheme (daily cycle).
std::size_t default_period(SplitScheme scheme);

}  // namespace fraug
