#pragma once

// Checkpoint JSON: {format_version, version, config, metrics, model, params}
// where params maps each tensor name to {shape, data} (row-major, doubles at
// round-trip precision).

#include "cegncde/config.hpp"
#include "cegncde/model.hpp"
#include "cegncde/training.hpp"

#include <string>

namespace cegncde {

struct Checkpoint {
    json config;
    json metrics = json::object();
    Model model;
};

json metrics_to_json(const MetricsReport& report);
json params_to_json(const ModelParams& params);
ModelParams params_from_json(const json& j, const ModelDims& dims, const Ablation& ablation);

json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const json& j);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace cegncde
