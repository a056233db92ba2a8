#pragma once

// Desk-scale synthetic traffic: per-node phase-shifted sinusoids with seeded
// Gaussian noise and optional missing cells. Node i belongs to phase group
// i % phase_groups; nodes in one group share phase and level, so they are
// each other's nearest series under DTW.

#include "cegncde/data_io.hpp"
#include "cegncde/masks.hpp"

#include <json.hpp>

#include <cstdint>

namespace cegncde {

struct SyntheticSpec {
    int nodes = 5;
    int steps = 1000;
    int channels = 1;
    int phase_groups = 0;  // 0 means one group per node
    int interval_minutes = 5;
    double period = 48.0;  // in steps
    double amplitude = 40.0;
    double level = 100.0;
    double level_step = 15.0;  // added per phase group
    double noise_std = 1.0;
    double missing_rate = 0.0;
    std::uint64_t seed = 1;
    std::string start_time = "2024-01-01T00:00:00";

    void validate() const;
    int groups() const { return phase_groups > 0 ? phase_groups : nodes; }
    static SyntheticSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

RawDataset generate_synthetic(const SyntheticSpec& spec);

// Nodes placed one unit apart on a line; every ordered pair is listed.
DistanceTable synthetic_distances(int nodes);
void write_distance_table(const DistanceTable& table, const std::string& path);

}  // namespace cegncde
