#include "cegncde/config.hpp"

#include "cegncde/errors.hpp"

#include <cstdlib>
#include <fstream>

namespace cegncde {

json default_config() {
    return json{
        {"dataset", ""},
        {"output_dir", "run"},
        {"distance_file", ""},
        {"geo_threshold", 0.0},
        {"semantic_k", 10},
        {"dtw_max_points", 288},
        {"split_ratios", {0.6, 0.2, 0.2}},
        {"aggregate_minutes", 0},
        {"window", 12},
        {"horizon", 12},
        {"learning_rate", 0.001},
        {"batch_size", 64},
        {"max_epochs", 200},
        {"patience", 25},
        {"beta", 0.5},
        {"layers", 3},
        {"hidden_h", 64},
        {"hidden_z", 64},
        {"qk_dim", 32},
        {"embed_dim", 8},
        {"seed", 1},
        {"solver", "rk4"},
        {"steps_per_interval", 1},
        {"ablation", "none"},
        {"grad_clip", 5.0},
        {"threads", 1},
    };
}

namespace {

json coerce(const std::string& key, const json& like, const std::string& raw) {
    try {
        std::size_t used = 0;
        if (like.is_boolean()) {
            if (raw == "true" || raw == "1") return true;
            if (raw == "false" || raw == "0") return false;
            throw std::invalid_argument(raw);
        }
        if (like.is_number_integer()) {
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
        if (like.is_number()) {
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
        if (like.is_array()) {
            json arr = json::array();
            std::size_t start = 0;
            while (start <= raw.size()) {
                const std::size_t comma = raw.find(',', start);
                const std::string cell = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                arr.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return arr;
        }
        return raw;
    } catch (const std::logic_error&) {
        throw ConfigError("--" + key + ": cannot parse '" + raw + "' as " + like.type_name());
    }
}

void check_known(const json& j) {
    const json defaults = default_config();
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!defaults.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    }
}

}  // namespace

json apply_overrides(json base, const std::vector<std::pair<std::string, std::string>>& overrides) {
    const json defaults = default_config();
    for (auto [key, value] : overrides) {
        for (char& ch : key)
            if (ch == '-') ch = '_';
        if (!defaults.contains(key)) throw ConfigError("unknown option --" + key);
        base[key] = coerce(key, defaults.at(key), value);
    }
    return base;
}

std::vector<std::pair<std::string, std::string>> parse_override_args(const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0 || a.size() < 3) throw ConfigError("unexpected argument '" + a + "'");
        const std::size_t eq = a.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
        } else {
            if (i + 1 >= args.size()) throw ConfigError("option " + a + " needs a value");
            out.emplace_back(a.substr(2), args[++i]);
        }
    }
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
    check_known(j);
    return j;
}

json resolve_config(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides) {
    json cfg = default_config();
    if (!config_path.empty()) {
        const json file = load_config_file(config_path);
        for (auto it = file.begin(); it != file.end(); ++it) cfg[it.key()] = it.value();
    }
    if (const char* env = std::getenv("CEGNCDE_THREADS"); env && *env) cfg = apply_overrides(cfg, {{"threads", env}});
    cfg = apply_overrides(cfg, overrides);
    RunConfig::from_json(cfg);  // type and range validation
    return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig r;
    try {
        r.dataset = j.at("dataset").get<std::string>();
        r.output_dir = j.at("output_dir").get<std::string>();
        r.distance_file = j.at("distance_file").get<std::string>();
        r.geo_threshold = j.at("geo_threshold").get<double>();
        r.semantic_k = j.at("semantic_k").get<int>();
        r.dtw_max_points = j.at("dtw_max_points").get<int>();
        const auto ratios = j.at("split_ratios").get<std::vector<double>>();
        if (ratios.size() != 3) throw ConfigError("split_ratios needs 3 entries");
        r.split_ratios = {ratios[0], ratios[1], ratios[2]};
        r.aggregate_minutes = j.at("aggregate_minutes").get<int>();
        r.window = j.at("window").get<int>();
        r.horizon = j.at("horizon").get<int>();
        TrainConfig& t = r.train;
        t.learning_rate = j.at("learning_rate").get<double>();
        t.batch_size = j.at("batch_size").get<int>();
        t.max_epochs = j.at("max_epochs").get<int>();
        t.patience = j.at("patience").get<int>();
        t.beta = j.at("beta").get<double>();
        t.layers = j.at("layers").get<int>();
        t.hidden_h = j.at("hidden_h").get<int>();
        t.hidden_z = j.at("hidden_z").get<int>();
        t.qk_dim = j.at("qk_dim").get<int>();
        t.embed_dim = j.at("embed_dim").get<int>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.solver.method = parse_solver_method(j.at("solver").get<std::string>());
        t.solver.steps_per_interval = j.at("steps_per_interval").get<int>();
        t.ablation = Ablation::parse(j.at("ablation").get<std::string>());
        t.grad_clip = j.at("grad_clip").get<double>();
        t.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    r.train.validate();
    if (r.window < 2 || r.horizon < 1) throw ConfigError("window must be >= 2 and horizon >= 1");
    if (r.semantic_k < 1) throw ConfigError("semantic_k must be >= 1");
    if (r.dtw_max_points < 1) throw ConfigError("dtw_max_points must be >= 1");
    if (r.aggregate_minutes < 0) throw ConfigError("aggregate_minutes must be >= 0");
    if (!r.distance_file.empty() && !(r.geo_threshold > 0.0)) {
        throw ConfigError("geo_threshold must be > 0 when distance_file is set");
    }
    return r;
}

ModelDims RunConfig::dims(int nodes, int channels) const {
    ModelDims d;
    d.nodes = nodes;
    d.channels = channels;
    d.window = window;
    d.horizon = horizon;
    d.hidden_h = train.hidden_h;
    d.hidden_z = train.hidden_z;
    d.layers = train.layers;
    d.qk_dim = train.qk_dim;
    d.embed_dim = train.embed_dim;
    return d;
}

}  // namespace cegncde
