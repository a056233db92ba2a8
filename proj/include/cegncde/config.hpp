#pragma once

// Run configuration: JSON file, `--key value` overrides, and the typed view.
// Precedence is flag > CEGNCDE_THREADS (threads only) > file > default.

#include "cegncde/params.hpp"
#include "cegncde/training.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace cegncde {

using json = nlohmann::json;

json default_config();

// Pairs of (key, raw value). Dashes in keys are read as underscores; values
// are coerced to the type of the default. Unknown keys raise ConfigError.
json apply_overrides(json base, const std::vector<std::pair<std::string, std::string>>& overrides);

// Parses "--key value" tokens (also "--key=value").
std::vector<std::pair<std::string, std::string>> parse_override_args(const std::vector<std::string>& args);

json load_config_file(const std::string& path);

json resolve_config(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides);

struct RunConfig {
    std::string dataset;
    std::string output_dir;
    std::string distance_file;
    double geo_threshold = 0.0;
    int semantic_k = 10;
    int dtw_max_points = 288;
    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
    int aggregate_minutes = 0;  // 0 keeps the source interval
    int window = 12;
    int horizon = 12;
    TrainConfig train;

    static RunConfig from_json(const json& j);
    ModelDims dims(int nodes, int channels) const;
};

}  // namespace cegncde
