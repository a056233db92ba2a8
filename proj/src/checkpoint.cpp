#include "cegncde/checkpoint.hpp"

#include "cegncde/errors.hpp"
#include "cegncde/version.hpp"

#include <fstream>

namespace cegncde {

namespace {

json matrix_rows(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_rows(const json& rows, const std::string& what) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n) throw DataError("checkpoint: " + what + " is not square");
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from(const json& a) {
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = a[i].get<double>();
    return v;
}

json per_horizon(const std::vector<double>& v) { return json(v); }

}  // namespace

json metrics_to_json(const MetricsReport& r) {
    return json{{"mae", r.mae},
                {"rmse", r.rmse},
                {"mape", r.mape},
                {"count", r.count},
                {"mape_count", r.mape_count},
                {"per_horizon",
                 {{"mae", per_horizon(r.mae_per_horizon)},
                  {"rmse", per_horizon(r.rmse_per_horizon)},
                  {"mape", per_horizon(r.mape_per_horizon)}}}};
}

json params_to_json(const ModelParams& params) {
    json out = json::object();
    ModelParams::visit(params, [&](const std::string& name, const Mat& m, bool is_vector) {
        json data = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
        json shape = is_vector ? json::array({m.cols()}) : json::array({m.rows(), m.cols()});
        out[name] = {{"shape", shape}, {"data", data}};
    });
    return out;
}

ModelParams params_from_json(const json& j, const ModelDims& dims, const Ablation& ablation) {
    ModelParams p = ModelParams::zeros(dims, ablation);
    ModelParams::visit(p, [&](const std::string& name, Mat& m, bool) {
        if (!j.contains(name)) throw DataError("checkpoint: missing parameter " + name);
        const json& entry = j.at(name);
        const auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != static_cast<std::size_t>(m.size())) {
            throw ShapeError("checkpoint: parameter " + name + " has " + std::to_string(data.size()) +
                             " values, expected " + std::to_string(m.size()) + " " + shape_string(m));
        }
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
    });
    return p;
}

json checkpoint_to_json(const Checkpoint& ck) {
    const Model& m = ck.model;
    json model{{"dims",
                {{"nodes", m.dims.nodes},
                 {"channels", m.dims.channels},
                 {"window", m.dims.window},
                 {"horizon", m.dims.horizon},
                 {"hidden_h", m.dims.hidden_h},
                 {"hidden_z", m.dims.hidden_z},
                 {"layers", m.dims.layers},
                 {"qk_dim", m.dims.qk_dim},
                 {"embed_dim", m.dims.embed_dim}}},
               {"ablation", m.ablation.name()},
               {"beta", m.beta},
               {"solver", {{"method", to_string(m.solver.method)}, {"steps_per_interval", m.solver.steps_per_interval}}},
               {"normalization", {{"mean", vec_json(m.scaler.mean)}, {"std", vec_json(m.scaler.std)}}},
               {"masks", {{"geo", matrix_rows(m.geo_mask.values)}, {"sem", matrix_rows(m.sem_mask.values)}}}};
    return json{{"format_version", kCheckpointFormat},
                {"version", kVersion},
                {"config", ck.config},
                {"metrics", ck.metrics},
                {"model", model},
                {"params", params_to_json(m.params)}};
}

Checkpoint checkpoint_from_json(const json& j) {
    Checkpoint ck;
    try {
        if (j.at("format_version").get<int>() != kCheckpointFormat) {
            throw DataError("checkpoint: unsupported format_version " + j.at("format_version").dump());
        }
        ck.config = j.at("config");
        ck.metrics = j.value("metrics", json::object());
        const json& m = j.at("model");
        const json& d = m.at("dims");
        Model& model = ck.model;
        model.dims.nodes = d.at("nodes").get<int>();
        model.dims.channels = d.at("channels").get<int>();
        model.dims.window = d.at("window").get<int>();
        model.dims.horizon = d.at("horizon").get<int>();
        model.dims.hidden_h = d.at("hidden_h").get<int>();
        model.dims.hidden_z = d.at("hidden_z").get<int>();
        model.dims.layers = d.at("layers").get<int>();
        model.dims.qk_dim = d.at("qk_dim").get<int>();
        model.dims.embed_dim = d.at("embed_dim").get<int>();
        model.ablation = Ablation::parse(m.at("ablation").get<std::string>());
        model.beta = m.at("beta").get<double>();
        model.solver.method = parse_solver_method(m.at("solver").at("method").get<std::string>());
        model.solver.steps_per_interval = m.at("solver").at("steps_per_interval").get<int>();
        model.scaler.mean = vec_from(m.at("normalization").at("mean"));
        model.scaler.std = vec_from(m.at("normalization").at("std"));
        model.geo_mask = {matrix_from_rows(m.at("masks").at("geo"), "geo mask"), MaskKind::geographic};
        model.sem_mask = {matrix_from_rows(m.at("masks").at("sem"), "sem mask"), MaskKind::semantic};
        model.params = params_from_json(j.at("params"), model.dims, model.ablation);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    ck.model.check();
    return ck;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_json_file(path, checkpoint_to_json(ck)); }

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid JSON (" + e.what() + ")");
    }
    return checkpoint_from_json(j);
}

}  // namespace cegncde
