#include "cegncde/cegg.hpp"

#include "cegncde/errors.hpp"

#include <cmath>

namespace cegncde {

CeggParams CeggParams::init(const ModelDims& dims, std::mt19937_64& rng) {
    const int dh = dims.hidden_h;
    const int c = dims.channels;
    CeggParams p;
    p.W_H = uniform_init(c, dh, c, rng);
    for (int l = 0; l < dims.layers; ++l) {
        p.fc_weight.push_back(uniform_init(dh, dh, dh, rng));
        p.fc_bias.push_back(uniform_init(1, dh, dh, rng));
    }
    p.psi_weight = uniform_init(dh, dh * c, dh, rng);
    p.psi_bias = uniform_init(1, dh * c, dh, rng);
    p.W_Q = uniform_init(dh, dims.qk_dim, dh, rng);
    p.W_K = uniform_init(dh, dims.qk_dim, dh, rng);
    p.E = uniform_init(dims.nodes, dims.embed_dim, dims.embed_dim, rng);
    return p;
}

CeggParams CeggParams::zeros(const ModelDims& dims) {
    const int dh = dims.hidden_h;
    const int c = dims.channels;
    CeggParams p;
    p.W_H = Mat::Zero(c, dh);
    for (int l = 0; l < dims.layers; ++l) {
        p.fc_weight.push_back(Mat::Zero(dh, dh));
        p.fc_bias.push_back(Mat::Zero(1, dh));
    }
    p.psi_weight = Mat::Zero(dh, dh * c);
    p.psi_bias = Mat::Zero(1, dh * c);
    p.W_Q = Mat::Zero(dh, dims.qk_dim);
    p.W_K = Mat::Zero(dh, dims.qk_dim);
    p.E = Mat::Zero(dims.nodes, dims.embed_dim);
    return p;
}

void CeggParams::check(const ModelDims& dims) const {
    const int dh = dims.hidden_h;
    const int c = dims.channels;
    if (static_cast<int>(fc_weight.size()) != dims.layers || fc_bias.size() != fc_weight.size()) {
        throw ShapeError("cegg: expected " + std::to_string(dims.layers) + " FC layers, got " +
                         std::to_string(fc_weight.size()));
    }
    require_shape(W_H, c, dh, "cegg.W_H");
    for (std::size_t l = 0; l < fc_weight.size(); ++l) {
        require_shape(fc_weight[l], dh, dh, "cegg.fc.weight");
        require_shape(fc_bias[l], 1, dh, "cegg.fc.bias");
    }
    require_shape(psi_weight, dh, dh * c, "cegg.psi.weight");
    require_shape(psi_bias, 1, dh * c, "cegg.psi.bias");
    require_shape(W_Q, dh, dims.qk_dim, "cegg.W_Q");
    require_shape(W_K, dh, dims.qk_dim, "cegg.W_K");
    require_shape(E, dims.nodes, dims.embed_dim, "cegg.E");
}

CeggVars CeggVars::bind(ad::Tape& tape, const CeggParams& params, bool requires_grad) {
    auto leaf = [&](const Mat& m) { return requires_grad ? tape.parameter(m) : tape.constant(m); };
    if (params.fc_weight.empty()) throw ShapeError("cegg: at least one FC layer is required");
    CeggVars v;
    v.W_H = leaf(params.W_H);
    for (std::size_t l = 0; l < params.fc_weight.size(); ++l) {
        v.fc_weight.push_back(leaf(params.fc_weight[l]));
        v.fc_bias.push_back(leaf(params.fc_bias[l]));
    }
    v.psi_weight = leaf(params.psi_weight);
    v.psi_bias = leaf(params.psi_bias);
    v.W_Q = leaf(params.W_Q);
    v.W_K = leaf(params.W_K);
    v.E = leaf(params.E);
    v.channels = static_cast<int>(params.W_H.rows());
    v.qk_dim = static_cast<int>(params.W_Q.cols());
    if (params.W_K.cols() != params.W_Q.cols()) throw ShapeError("cegg: W_Q and W_K widths differ");
    return v;
}

namespace cegg {

ad::Var init_hidden(ad::Var x0, const CeggVars& p) { return ad::relu(ad::matmul(x0, p.W_H)); }

ad::Var vector_field_f(ad::Var hidden, const CeggVars& p) {
    ad::Var b = hidden;
    const std::size_t layers = p.fc_weight.size();
    for (std::size_t l = 0; l < layers; ++l) {
        b = ad::add_row(ad::matmul(b, p.fc_weight[l]), p.fc_bias[l]);
        if (l + 1 < layers) b = ad::relu(b);
    }
    return ad::tanh(ad::add_row(ad::matmul(b, p.psi_weight), p.psi_bias));
}

ad::Var attention_adjacency(ad::Var hidden, const CeggVars& p) {
    ad::Var q = ad::matmul(hidden, p.W_Q);
    ad::Var k = ad::matmul(hidden, p.W_K);
    return ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(p.qk_dim)));
}

ad::Var static_adjacency(const CeggVars& p) {
    return ad::row_softmax(ad::relu(ad::matmul(p.E, ad::transpose(p.E))));
}

ad::Var fuse(ad::Var attention, ad::Var stat, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("fuse: beta must lie in [0, 1], got " + std::to_string(beta));
    return ad::add(ad::scale(attention, 1.0 - beta), ad::scale(stat, beta));
}

}  // namespace cegg

Mat init_hidden(const Mat& x0, const CeggParams& params) {
    require_shape(x0, x0.rows(), params.W_H.rows(), "init_hidden: X(t1)");
    ad::Tape tape;
    const CeggVars v = CeggVars::bind(tape, params, false);
    return cegg::init_hidden(tape.constant(x0), v).value();
}

Mat vector_field_f(const Mat& hidden, const CeggParams& params) {
    ad::Tape tape;
    const CeggVars v = CeggVars::bind(tape, params, false);
    return cegg::vector_field_f(tape.constant(hidden), v).value();
}

Mat attention_adjacency(const Mat& hidden, const CeggParams& params) {
    ad::Tape tape;
    const CeggVars v = CeggVars::bind(tape, params, false);
    return cegg::attention_adjacency(tape.constant(hidden), v).value();
}

Mat static_adjacency(const CeggParams& params) {
    if (!all_finite(params.E)) throw NumericalError("static_adjacency: non-finite node embeddings");
    ad::Tape tape;
    const CeggVars v = CeggVars::bind(tape, params, false);
    return cegg::static_adjacency(v).value();
}

Mat fuse(const Mat& attention, const Mat& stat, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("fuse: beta must lie in [0, 1], got " + std::to_string(beta));
    require_shape(stat, attention.rows(), attention.cols(), "fuse: A_S");
    return attention * (1.0 - beta) + stat * beta;
}

AdjacencyState adjacency_at(const Mat& hidden, const CeggParams& params, double beta, double time) {
    AdjacencyState s;
    s.A_E = attention_adjacency(hidden, params);
    s.A_S = static_adjacency(params);
    s.A_fused = fuse(s.A_E, s.A_S, beta);
    s.time = time;
    return s;
}

}  // namespace cegncde
