#include "cegncde/synthetic.hpp"

#include "cegncde/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace cegncde {

void SyntheticSpec::validate() const {
    if (nodes < 2) throw ConfigError("synthetic: nodes must be >= 2");
    if (steps < 2) throw ConfigError("synthetic: steps must be >= 2");
    if (channels < 1) throw ConfigError("synthetic: channels must be >= 1");
    if (phase_groups < 0 || phase_groups > nodes) throw ConfigError("synthetic: phase_groups must be in [0, nodes]");
    if (interval_minutes < 1) throw ConfigError("synthetic: interval_minutes must be >= 1");
    if (!(period > 0.0)) throw ConfigError("synthetic: period must be > 0");
    if (!(noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be >= 0");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("synthetic: missing_rate must be in [0, 1)");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    if (!j.is_object()) throw ConfigError("synthetic: spec must be a JSON object");
    const nlohmann::json known = s.to_json();
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) throw ConfigError("synthetic: unknown key '" + it.key() + "'");
    }
    try {
        s.nodes = j.value("nodes", s.nodes);
        s.steps = j.value("steps", s.steps);
        s.channels = j.value("channels", s.channels);
        s.phase_groups = j.value("phase_groups", s.phase_groups);
        s.interval_minutes = j.value("interval_minutes", s.interval_minutes);
        s.period = j.value("period", s.period);
        s.amplitude = j.value("amplitude", s.amplitude);
        s.level = j.value("level", s.level);
        s.level_step = j.value("level_step", s.level_step);
        s.noise_std = j.value("noise_std", s.noise_std);
        s.missing_rate = j.value("missing_rate", s.missing_rate);
        s.seed = j.value("seed", s.seed);
        s.start_time = j.value("start_time", s.start_time);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synthetic: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json SyntheticSpec::to_json() const {
    return {{"nodes", nodes},
            {"steps", steps},
            {"channels", channels},
            {"phase_groups", phase_groups},
            {"interval_minutes", interval_minutes},
            {"period", period},
            {"amplitude", amplitude},
            {"level", level},
            {"level_step", level_step},
            {"noise_std", noise_std},
            {"missing_rate", missing_rate},
            {"seed", seed},
            {"start_time", start_time}};
}

RawDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    RawDataset out;
    out.values = Tensor3(spec.steps, spec.nodes, spec.channels);
    out.interval_minutes = spec.interval_minutes;
    out.start_time = spec.start_time;
    for (int c = 0; c < spec.channels; ++c) out.channels.push_back(spec.channels == 1 ? "flow" : "ch" + std::to_string(c));
    for (int n = 0; n < spec.nodes; ++n) out.node_names.push_back("node_" + std::to_string(n));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int groups = spec.groups();
    const double two_pi = 2.0 * std::numbers::pi;
    for (int t = 0; t < spec.steps; ++t) {
        for (int n = 0; n < spec.nodes; ++n) {
            const int g = n % groups;
            const double phase = two_pi * g / groups;
            for (int c = 0; c < spec.channels; ++c) {
                const double base = spec.level + spec.level_step * g + 10.0 * c;
                double v = base + spec.amplitude * std::sin(two_pi * t / spec.period + phase) +
                           spec.noise_std * noise(rng);
                // drawn for every cell so the noise stream does not depend on the missing rate
                const double u = unit(rng);
                if (u < spec.missing_rate) v = std::numeric_limits<double>::quiet_NaN();
                out.values(t, n, c) = v;
            }
        }
    }
    return out;
}

DistanceTable synthetic_distances(int nodes) {
    DistanceTable table;
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j)
            if (i != j) table.push_back({i, j, static_cast<double>(std::abs(i - j))});
    return table;
}

void write_distance_table(const DistanceTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "from,to,cost\n";
    for (const auto& e : table) out << e.from << ',' << e.to << ',' << format_double(e.distance) << '\n';
}

}  // namespace cegncde
