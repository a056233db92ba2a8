#include "cegncde/gncde.hpp"

#include "cegncde/errors.hpp"

namespace cegncde {

GruBranchParams GruBranchParams::init(int dz, std::mt19937_64& rng) {
    GruBranchParams p;
    p.W_z = uniform_init(dz, dz, dz, rng);
    p.W_r = uniform_init(dz, dz, dz, rng);
    p.W_h = uniform_init(dz, dz, dz, rng);
    p.b_z = uniform_init(1, dz, dz, rng);
    p.b_r = uniform_init(1, dz, dz, rng);
    p.b_h = uniform_init(1, dz, dz, rng);
    return p;
}

GruBranchParams GruBranchParams::zeros(int dz) {
    return {Mat::Zero(dz, dz), Mat::Zero(dz, dz), Mat::Zero(dz, dz),
            Mat::Zero(1, dz),  Mat::Zero(1, dz),  Mat::Zero(1, dz)};
}

GncdeParams GncdeParams::init(const ModelDims& dims, const Ablation& ablation, std::mt19937_64& rng) {
    const int dz = dims.hidden_z;
    const int c = dims.channels;
    const int psi_in = dz * ablation.active_branches();
    if (psi_in == 0) throw ConfigError("gncde: geographic and semantic branches cannot both be disabled");
    GncdeParams p;
    p.W_Z = uniform_init(c, dz, c, rng);
    p.geo = GruBranchParams::init(dz, rng);
    p.sem = GruBranchParams::init(dz, rng);
    p.psi_weight = uniform_init(psi_in, dz * c, psi_in, rng);
    p.psi_bias = uniform_init(1, dz * c, psi_in, rng);
    p.head_weight = uniform_init(dz, dims.horizon * c, dz, rng);
    p.head_bias = uniform_init(1, dims.horizon * c, dz, rng);
    return p;
}

GncdeParams GncdeParams::zeros(const ModelDims& dims, const Ablation& ablation) {
    const int dz = dims.hidden_z;
    const int c = dims.channels;
    const int psi_in = dz * ablation.active_branches();
    if (psi_in == 0) throw ConfigError("gncde: geographic and semantic branches cannot both be disabled");
    GncdeParams p;
    p.W_Z = Mat::Zero(c, dz);
    p.geo = GruBranchParams::zeros(dz);
    p.sem = GruBranchParams::zeros(dz);
    p.psi_weight = Mat::Zero(psi_in, dz * c);
    p.psi_bias = Mat::Zero(1, dz * c);
    p.head_weight = Mat::Zero(dz, dims.horizon * c);
    p.head_bias = Mat::Zero(1, dims.horizon * c);
    return p;
}

void GncdeParams::check(const ModelDims& dims, const Ablation& ablation) const {
    const int dz = dims.hidden_z;
    const int c = dims.channels;
    require_shape(W_Z, c, dz, "gncde.W_Z");
    for (const GruBranchParams* b : {&geo, &sem}) {
        require_shape(b->W_z, dz, dz, "gncde.W_z");
        require_shape(b->W_r, dz, dz, "gncde.W_r");
        require_shape(b->W_h, dz, dz, "gncde.W_h");
        require_shape(b->b_z, 1, dz, "gncde.b_z");
        require_shape(b->b_r, 1, dz, "gncde.b_r");
        require_shape(b->b_h, 1, dz, "gncde.b_h");
    }
    require_shape(psi_weight, dz * ablation.active_branches(), dz * c, "gncde.psi.weight");
    require_shape(psi_bias, 1, dz * c, "gncde.psi.bias");
    require_shape(head_weight, dz, dims.horizon * c, "gncde.head.weight");
    require_shape(head_bias, 1, dims.horizon * c, "gncde.head.bias");
}

GruBranchVars GruBranchVars::bind(ad::Tape& tape, const GruBranchParams& p, bool requires_grad) {
    auto leaf = [&](const Mat& m) { return requires_grad ? tape.parameter(m) : tape.constant(m); };
    return {leaf(p.W_z), leaf(p.W_r), leaf(p.W_h), leaf(p.b_z), leaf(p.b_r), leaf(p.b_h)};
}

GncdeVars GncdeVars::bind(ad::Tape& tape, const GncdeParams& p, bool requires_grad) {
    auto leaf = [&](const Mat& m) { return requires_grad ? tape.parameter(m) : tape.constant(m); };
    GncdeVars v;
    v.W_Z = leaf(p.W_Z);
    v.geo = GruBranchVars::bind(tape, p.geo, requires_grad);
    v.sem = GruBranchVars::bind(tape, p.sem, requires_grad);
    v.psi_weight = leaf(p.psi_weight);
    v.psi_bias = leaf(p.psi_bias);
    v.head_weight = leaf(p.head_weight);
    v.head_bias = leaf(p.head_bias);
    return v;
}

namespace gncde {

ad::Var init_state(ad::Var x0, const GncdeVars& p) { return ad::relu(ad::matmul(x0, p.W_Z)); }

ad::Var mask_normalize(ad::Var adjacency, const Mat& mask) {
    return ad::masked_row_softmax(ad::relu(adjacency), mask);
}

ad::Var gru_graph_step(ad::Var state, ad::Var normalized, const GruBranchVars& p) {
    ad::Var aggregated = ad::matmul(normalized, state);
    ad::Var update = ad::sigmoid(ad::add_row(ad::matmul(aggregated, p.W_z), p.b_z));
    ad::Var reset = ad::sigmoid(ad::add_row(ad::matmul(aggregated, p.W_r), p.b_r));
    ad::Var candidate = ad::tanh(
        ad::add_row(ad::matmul(ad::matmul(normalized, ad::hadamard(reset, state)), p.W_h), p.b_h));
    return ad::add(ad::hadamard(update, state), ad::hadamard(ad::affine(update, -1.0, 1.0), candidate));
}

ad::Var vector_field_g(ad::Var state, ad::Var fused, const Mat& geo_mask, const Mat& sem_mask, const GncdeVars& p,
                       const Ablation& ablation) {
    if (ablation.active_branches() == 0) {
        throw ConfigError("vector_field_g: geographic and semantic branches cannot both be disabled");
    }
    const Eigen::Index n = state.rows();
    const Mat ones = ablation.no_mask ? Mat::Ones(n, n) : Mat();
    ad::Var geo, sem;
    if (!ablation.no_gvf) {
        geo = gru_graph_step(state, mask_normalize(fused, ablation.no_mask ? ones : geo_mask), p.geo);
    }
    if (!ablation.no_svf) {
        sem = gru_graph_step(state, mask_normalize(fused, ablation.no_mask ? ones : sem_mask), p.sem);
    }
    ad::Var joined = !geo.valid() ? sem : (!sem.valid() ? geo : ad::concat_cols(geo, sem));
    return ad::add_row(ad::matmul(joined, p.psi_weight), p.psi_bias);
}

ad::Var forecast_head(ad::Var final_state, const GncdeVars& p) {
    return ad::add_row(ad::matmul(final_state, p.head_weight), p.head_bias);
}

}  // namespace gncde

Rhs assemble_rhs(const RhsContext& ctx) {
    if (!ctx.path || !ctx.cegg || !ctx.gncde || !ctx.geo_mask || !ctx.sem_mask) {
        throw std::invalid_argument("assemble_rhs: incomplete context");
    }
    if (!ctx.ablation.no_static && !ctx.static_adjacency.valid()) {
        throw std::invalid_argument("assemble_rhs: static adjacency missing");
    }
    return [ctx](double s, const VarState& y) -> VarState {
        const Mat control = ctx.path->derivative(s);
        ad::Var dH = ad::contract_channels(cegg::vector_field_f(y.H, *ctx.cegg), control);
        ad::Var attention = cegg::attention_adjacency(y.H, *ctx.cegg);
        ad::Var fused = ctx.ablation.no_static ? attention : cegg::fuse(attention, ctx.static_adjacency, ctx.beta);
        ad::Var field = gncde::vector_field_g(y.Z, fused, *ctx.geo_mask, *ctx.sem_mask, *ctx.gncde, ctx.ablation);
        ad::Var dZ = ad::contract_channels(field, control);
        return {dZ, dH};
    };
}

std::function<ad::Var(double, const ad::Var&)> assemble_hidden_rhs(const ControlPath& path, const CeggVars& cegg) {
    return [&path, &cegg](double s, const ad::Var& h) {
        return ad::contract_channels(cegg::vector_field_f(h, cegg), path.derivative(s));
    };
}

Mat init_state(const Mat& x0, const GncdeParams& params) {
    require_shape(x0, x0.rows(), params.W_Z.rows(), "init_state: X(t1)");
    ad::Tape tape;
    const GncdeVars v = GncdeVars::bind(tape, params, false);
    return gncde::init_state(tape.constant(x0), v).value();
}

Mat mask_normalize(const Mat& adjacency, const MaskMatrix& mask) {
    require_shape(mask.values, adjacency.rows(), adjacency.cols(), "mask_normalize: mask");
    ad::Tape tape;
    return gncde::mask_normalize(tape.constant(adjacency), mask.values).value();
}

Mat gru_graph_step(const Mat& state, const Mat& normalized, const GruBranchParams& params) {
    require_shape(normalized, state.rows(), state.rows(), "gru_graph_step: adjacency");
    ad::Tape tape;
    const GruBranchVars v = GruBranchVars::bind(tape, params, false);
    return gncde::gru_graph_step(tape.constant(state), tape.constant(normalized), v).value();
}

Mat vector_field_g(const Mat& state, const Mat& fused, const MaskMatrix& geo, const MaskMatrix& sem,
                   const GncdeParams& params, const Ablation& ablation) {
    require_shape(fused, state.rows(), state.rows(), "vector_field_g: adjacency");
    require_shape(geo.values, state.rows(), state.rows(), "vector_field_g: geographic mask");
    require_shape(sem.values, state.rows(), state.rows(), "vector_field_g: semantic mask");
    ad::Tape tape;
    const GncdeVars v = GncdeVars::bind(tape, params, false);
    return gncde::vector_field_g(tape.constant(state), tape.constant(fused), geo.values, sem.values, v, ablation)
        .value();
}

Tensor3 head_output_to_tensor(const Mat& head_output, int horizon, int channels) {
    require_shape(head_output, head_output.rows(), static_cast<Eigen::Index>(horizon) * channels, "forecast head output");
    const int n = static_cast<int>(head_output.rows());
    Tensor3 out(horizon, n, channels);
    for (int h = 0; h < horizon; ++h)
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < channels; ++c) out(h, i, c) = head_output(i, h * channels + c);
    return out;
}

Tensor3 forecast_head(const Mat& final_state, const GncdeParams& params, int horizon) {
    require_shape(final_state, final_state.rows(), params.head_weight.rows(), "forecast_head: Z(t_T)");
    if (horizon < 1 || params.head_weight.cols() % horizon != 0) {
        throw ShapeError("forecast_head: head width " + std::to_string(params.head_weight.cols()) +
                         " incompatible with horizon " + std::to_string(horizon));
    }
    ad::Tape tape;
    const GncdeVars v = GncdeVars::bind(tape, params, false);
    const Mat out = gncde::forecast_head(tape.constant(final_state), v).value();
    return head_output_to_tensor(out, horizon, static_cast<int>(params.head_weight.cols() / horizon));
}

}  // namespace cegncde
