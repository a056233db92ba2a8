#pragma once

// Continuously evolving graph generator: hidden-state CDE vector field,
// attention adjacency, static embedding adjacency, and their fusion.

#include "cegncde/autodiff.hpp"
#include "cegncde/params.hpp"

#include <string>
#include <vector>

namespace cegncde {

struct CeggParams {
    Mat W_H;                        // C x d_h
    std::vector<Mat> fc_weight;     // L of d_h x d_h
    std::vector<Mat> fc_bias;       // L of 1 x d_h
    Mat psi_weight;                 // d_h x (d_h*C)
    Mat psi_bias;                   // 1 x (d_h*C)
    Mat W_Q;                        // d_h x d
    Mat W_K;                        // d_h x d
    Mat E;                          // N x d_e

    static CeggParams init(const ModelDims& dims, std::mt19937_64& rng);
    static CeggParams zeros(const ModelDims& dims);

    // f(name, matrix, is_vector) over every tensor in a fixed order.
    template <class Self, class F>
    static void visit(Self& self, F&& f) {
        f("cegg.W_H", self.W_H, false);
        for (std::size_t l = 0; l < self.fc_weight.size(); ++l) {
            f("cegg.fc" + std::to_string(l) + ".weight", self.fc_weight[l], false);
            f("cegg.fc" + std::to_string(l) + ".bias", self.fc_bias[l], true);
        }
        f("cegg.psi.weight", self.psi_weight, false);
        f("cegg.psi.bias", self.psi_bias, true);
        f("cegg.W_Q", self.W_Q, false);
        f("cegg.W_K", self.W_K, false);
        f("cegg.E", self.E, false);
    }

    void check(const ModelDims& dims) const;
};

struct CeggVars {
    ad::Var W_H;
    std::vector<ad::Var> fc_weight;
    std::vector<ad::Var> fc_bias;
    ad::Var psi_weight, psi_bias, W_Q, W_K, E;
    int channels = 1;
    int qk_dim = 1;

    static CeggVars bind(ad::Tape& tape, const CeggParams& params, bool requires_grad);
};

namespace cegg {

ad::Var init_hidden(ad::Var x0, const CeggVars& p);
// N x (d_h*C) holding the [N x d_h x C] field.
ad::Var vector_field_f(ad::Var hidden, const CeggVars& p);
ad::Var attention_adjacency(ad::Var hidden, const CeggVars& p);
ad::Var static_adjacency(const CeggVars& p);
ad::Var fuse(ad::Var attention, ad::Var stat, double beta);

}  // namespace cegg

// Value-level entry points.
Mat init_hidden(const Mat& x0, const CeggParams& params);
Mat vector_field_f(const Mat& hidden, const CeggParams& params);
Mat attention_adjacency(const Mat& hidden, const CeggParams& params);
Mat static_adjacency(const CeggParams& params);
Mat fuse(const Mat& attention, const Mat& stat, double beta);

struct AdjacencyState {
    Mat A_E;
    Mat A_S;
    Mat A_fused;
    double time = 0.0;
};

AdjacencyState adjacency_at(const Mat& hidden, const CeggParams& params, double beta, double time);

}  // namespace cegncde
