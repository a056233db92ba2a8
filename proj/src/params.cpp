#include "cegncde/params.hpp"

#include "cegncde/errors.hpp"

#include <cmath>

namespace cegncde {

void ModelDims::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
    };
    positive(channels, "channels");
    positive(window, "window");
    positive(horizon, "horizon");
    positive(hidden_h, "hidden_h");
    positive(hidden_z, "hidden_z");
    positive(layers, "layers");
    positive(qk_dim, "qk_dim");
    positive(embed_dim, "embed_dim");
    if (nodes < 1) throw ConfigError("nodes must be >= 1");
    if (window < 2) throw ConfigError("window must be >= 2 to build a control path");
}

Ablation Ablation::parse(const std::string& name) {
    Ablation a;
    if (name.empty() || name == "none") return a;
    if (name == "no-mask") a.no_mask = true;
    else if (name == "no-gvf") a.no_gvf = true;
    else if (name == "no-svf") a.no_svf = true;
    else if (name == "no-static") a.no_static = true;
    else throw ConfigError("unknown ablation '" + name + "' (expected none, no-mask, no-gvf, no-svf, no-static)");
    return a;
}

std::string Ablation::name() const {
    if (no_mask) return "no-mask";
    if (no_gvf) return "no-gvf";
    if (no_svf) return "no-svf";
    if (no_static) return "no-static";
    return "none";
}

Mat uniform_init(Eigen::Index rows, Eigen::Index cols, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

}  // namespace cegncde
