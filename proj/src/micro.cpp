#include "cegncde/micro.hpp"

#include "cegncde/synthetic.hpp"
#include "cegncde/training.hpp"

#include <cmath>
#include <random>

namespace cegncde {

MicroProblem make_micro_problem(const MicroSpec& spec) {
    const int steps = spec.window + spec.horizon + spec.batch - 1;
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor3 series(steps, spec.nodes, spec.channels);
    for (int n = 0; n < spec.nodes; ++n)
        for (int c = 0; c < spec.channels; ++c) {
            const double level = 50.0 + 10.0 * u(rng);
            const double amp = 20.0 + 5.0 * u(rng);
            const double phase = 3.0 * u(rng);
            for (int t = 0; t < steps; ++t) series(t, n, c) = level + amp * std::sin(0.7 * t + phase) + 2.0 * u(rng);
        }

    ModelDims dims;
    dims.nodes = spec.nodes;
    dims.channels = spec.channels;
    dims.window = spec.window;
    dims.horizon = spec.horizon;
    dims.hidden_h = spec.hidden;
    dims.hidden_z = spec.hidden;
    dims.layers = spec.layers;
    dims.qk_dim = spec.qk_dim;
    dims.embed_dim = spec.embed_dim;
    dims.validate();

    MicroProblem p;
    Model& m = p.model;
    m.dims = dims;
    m.ablation = spec.ablation;
    m.beta = spec.ablation.no_static ? 0.0 : spec.beta;
    m.solver = spec.solver;
    if (spec.ablation.no_mask) {
        m.geo_mask = MaskMatrix::all_ones(spec.nodes, MaskKind::geographic);
        m.sem_mask = MaskMatrix::all_ones(spec.nodes, MaskKind::semantic);
    } else {
        m.geo_mask = geographic_mask(synthetic_distances(spec.nodes), 1.5, spec.nodes);
        m.sem_mask = spec.nodes > 1 ? semantic_mask(series, 1) : MaskMatrix::all_ones(spec.nodes, MaskKind::semantic);
    }
    m.scaler = ZScore::fit(series);
    m.params = ModelParams::init(dims, spec.ablation, spec.seed);
    m.check();

    SeriesSegment seg{series, Tensor3(steps, spec.nodes, spec.channels, 0.0), 0};
    const WindowSet windows(seg, spec.window, spec.horizon);
    p.batch = materialize(windows);
    return p;
}

}  // namespace cegncde
