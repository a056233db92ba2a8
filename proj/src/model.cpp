#include "cegncde/model.hpp"

#include "cegncde/errors.hpp"

#include <random>

namespace cegncde {

ModelParams ModelParams::init(const ModelDims& dims, const Ablation& ablation, std::uint64_t seed) {
    dims.validate();
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.cegg = CeggParams::init(dims, rng);
    p.gncde = GncdeParams::init(dims, ablation, rng);
    return p;
}

ModelParams ModelParams::zeros(const ModelDims& dims, const Ablation& ablation) {
    return {CeggParams::zeros(dims), GncdeParams::zeros(dims, ablation)};
}

ModelParams ModelParams::zeros_like() const {
    ModelParams out = *this;
    visit(out, [](const std::string&, Mat& m, bool) { m.setZero(); });
    return out;
}

std::vector<std::string> ModelParams::names() const {
    std::vector<std::string> out;
    visit(*this, [&](const std::string& name, const Mat&, bool) { out.push_back(name); });
    return out;
}

Mat& ModelParams::at(const std::string& name) {
    Mat* found = nullptr;
    visit(*this, [&](const std::string& n, Mat& m, bool) {
        if (n == name) found = &m;
    });
    if (!found) throw std::out_of_range("no parameter named '" + name + "'");
    return *found;
}

const Mat& ModelParams::at(const std::string& name) const { return const_cast<ModelParams*>(this)->at(name); }

std::size_t ModelParams::scalar_count() const {
    std::size_t total = 0;
    visit(*this, [&](const std::string&, const Mat& m, bool) { total += static_cast<std::size_t>(m.size()); });
    return total;
}

void ModelParams::check(const ModelDims& dims, const Ablation& ablation) const {
    cegg.check(dims);
    gncde.check(dims, ablation);
    visit(*this, [](const std::string& name, const Mat& m, bool) {
        if (!all_finite(m)) throw NumericalError("parameter " + name + " has non-finite entries");
    });
}

BoundModel BoundModel::bind(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
    BoundModel b;
    b.cegg = CeggVars::bind(tape, params.cegg, requires_grad);
    b.gncde = GncdeVars::bind(tape, params.gncde, requires_grad);

    auto& l = b.leaves;
    l.push_back(b.cegg.W_H);
    for (std::size_t i = 0; i < b.cegg.fc_weight.size(); ++i) {
        l.push_back(b.cegg.fc_weight[i]);
        l.push_back(b.cegg.fc_bias[i]);
    }
    l.insert(l.end(), {b.cegg.psi_weight, b.cegg.psi_bias, b.cegg.W_Q, b.cegg.W_K, b.cegg.E, b.gncde.W_Z});
    for (const GruBranchVars* g : {&b.gncde.geo, &b.gncde.sem}) l.insert(l.end(), {g->W_z, g->W_r, g->W_h, g->b_z, g->b_r, g->b_h});
    l.insert(l.end(), {b.gncde.psi_weight, b.gncde.psi_bias, b.gncde.head_weight, b.gncde.head_bias});

    std::size_t k = 0;
    ModelParams::visit(params, [&](const std::string& name, const Mat& m, bool) {
        if (k >= l.size() || l[k].rows() != m.rows() || l[k].cols() != m.cols()) {
            throw std::logic_error("BoundModel::bind: leaf order mismatch at " + name);
        }
        ++k;
    });
    if (k != l.size()) throw std::logic_error("BoundModel::bind: leaf count mismatch");
    return b;
}

void Model::check() const {
    dims.validate();
    params.check(dims, ablation);
    require_shape(geo_mask.values, dims.nodes, dims.nodes, "geographic mask");
    require_shape(sem_mask.values, dims.nodes, dims.nodes, "semantic mask");
    if (scaler.channels() != dims.channels) throw ShapeError("normalization channel count mismatch");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
}

namespace {

void check_window(const Model& model, const Tensor3& window) {
    if (window.steps() != model.dims.window || window.nodes() != model.dims.nodes ||
        window.channels() != model.dims.channels) {
        throw ShapeError("input window: expected [" + std::to_string(model.dims.window) + " x " +
                         std::to_string(model.dims.nodes) + " x " + std::to_string(model.dims.channels) + "], got [" +
                         std::to_string(window.steps()) + " x " + std::to_string(window.nodes()) + " x " +
                         std::to_string(window.channels()) + "]");
    }
}

struct PreparedForward {
    ControlPath path;
    ad::Var x0;
    ad::Var stat;
};

PreparedForward prepare(ad::Tape& tape, const BoundModel& bound, const Model& model, const Tensor3& window) {
    check_window(model, window);
    PreparedForward p{fit_path(ObservationSeries::regular(model.scaler.normalize(window))), {}, {}};
    p.x0 = tape.constant(p.path.value(0.0));
    if (!model.ablation.no_static) p.stat = cegg::static_adjacency(bound.cegg);
    return p;
}

RhsContext context_for(const Model& model, const BoundModel& bound, const PreparedForward& p) {
    RhsContext ctx;
    ctx.path = &p.path;
    ctx.cegg = &bound.cegg;
    ctx.gncde = &bound.gncde;
    ctx.static_adjacency = p.stat;
    ctx.geo_mask = &model.geo_mask.values;
    ctx.sem_mask = &model.sem_mask.values;
    ctx.beta = model.ablation.no_static ? 0.0 : model.beta;
    ctx.ablation = model.ablation;
    return ctx;
}

}  // namespace

ad::Var forward(ad::Tape& tape, const BoundModel& bound, const Model& model, const Tensor3& window) {
    const PreparedForward p = prepare(tape, bound, model, window);
    const Rhs rhs = assemble_rhs(context_for(model, bound, p));
    VarState initial{gncde::init_state(p.x0, bound.gncde), cegg::init_hidden(p.x0, bound.cegg)};
    const auto trajectory = integrate(rhs, initial, p.path.t_begin(), p.path.t_end(), model.solver);
    ad::Var head = gncde::forecast_head(trajectory.back().Z, bound.gncde);

    const int c = model.dims.channels;
    Vec scale(head.cols()), shift(head.cols());
    for (Eigen::Index k = 0; k < head.cols(); ++k) {
        scale(k) = model.scaler.std(k % c);
        shift(k) = model.scaler.mean(k % c);
    }
    return ad::column_affine(head, scale, shift);
}

Tensor3 predict(const Model& model, const Tensor3& window) {
    ad::Tape tape;
    const BoundModel bound = BoundModel::bind(tape, model.params, false);
    const ad::Var out = forward(tape, bound, model, window);
    return head_output_to_tensor(out.value(), model.dims.horizon, model.dims.channels);
}

Mat horizon_tensor_to_head(const Tensor3& x) {
    Mat out(x.nodes(), static_cast<Eigen::Index>(x.steps()) * x.channels());
    for (int h = 0; h < x.steps(); ++h)
        for (int i = 0; i < x.nodes(); ++i)
            for (int c = 0; c < x.channels(); ++c) out(i, h * x.channels() + c) = x(h, i, c);
    return out;
}

std::vector<AugmentedState<Mat>> joint_trajectory(const Model& model, const Tensor3& window) {
    ad::Tape tape;
    const BoundModel bound = BoundModel::bind(tape, model.params, false);
    const PreparedForward p = prepare(tape, bound, model, window);
    const Rhs rhs = assemble_rhs(context_for(model, bound, p));
    VarState initial{gncde::init_state(p.x0, bound.gncde), cegg::init_hidden(p.x0, bound.cegg)};
    const auto trajectory = integrate(rhs, initial, p.path.t_begin(), p.path.t_end(), model.solver);
    std::vector<AugmentedState<Mat>> out;
    for (const auto& s : trajectory) out.push_back({s.Z.value(), s.H.value()});
    return out;
}

std::vector<Mat> hidden_trajectory(const Model& model, const Tensor3& window) {
    ad::Tape tape;
    const BoundModel bound = BoundModel::bind(tape, model.params, false);
    const PreparedForward p = prepare(tape, bound, model, window);
    const auto rhs = assemble_hidden_rhs(p.path, bound.cegg);
    const auto trajectory =
        integrate(rhs, cegg::init_hidden(p.x0, bound.cegg), p.path.t_begin(), p.path.t_end(), model.solver);
    std::vector<Mat> out;
    for (const auto& h : trajectory) out.push_back(h.value());
    return out;
}

Mat semantic_adjacency_at(const Model& model, const Tensor3& window, double time) {
    ad::Tape tape;
    const BoundModel bound = BoundModel::bind(tape, model.params, false);
    const PreparedForward p = prepare(tape, bound, model, window);
    if (!(time >= p.path.t_begin() && time <= p.path.t_end())) {
        throw DataError("export time " + std::to_string(time) + " outside window [0, " +
                        std::to_string(p.path.t_end()) + "]");
    }
    VarState state{gncde::init_state(p.x0, bound.gncde), cegg::init_hidden(p.x0, bound.cegg)};
    if (time > p.path.t_begin()) {
        const Rhs rhs = assemble_rhs(context_for(model, bound, p));
        state = integrate(rhs, state, p.path.t_begin(), time, model.solver).back();
    }
    ad::Var attention = cegg::attention_adjacency(state.H, bound.cegg);
    ad::Var fused = model.ablation.no_static ? attention : cegg::fuse(attention, p.stat, model.beta);
    return gncde::mask_normalize(fused, model.sem_mask.values).value();
}

}  // namespace cegncde
