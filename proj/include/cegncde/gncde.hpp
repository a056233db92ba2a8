#pragma once

// Graph neural CDE: masked GRU-style graph vector field, augmented (Z, H)
// right-hand side, and the linear forecast head.

#include "cegncde/autodiff.hpp"
#include "cegncde/cegg.hpp"
#include "cegncde/control_path.hpp"
#include "cegncde/masks.hpp"
#include "cegncde/params.hpp"
#include "cegncde/solver.hpp"

#include <functional>

namespace cegncde {

struct GruBranchParams {
    Mat W_z, W_r, W_h;  // d_z x d_z
    Mat b_z, b_r, b_h;  // 1 x d_z

    static GruBranchParams init(int dz, std::mt19937_64& rng);
    static GruBranchParams zeros(int dz);

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + ".W_z", self.W_z, false);
        f(prefix + ".W_r", self.W_r, false);
        f(prefix + ".W_h", self.W_h, false);
        f(prefix + ".b_z", self.b_z, true);
        f(prefix + ".b_r", self.b_r, true);
        f(prefix + ".b_h", self.b_h, true);
    }
};

struct GncdeParams {
    Mat W_Z;                  // C x d_z
    GruBranchParams geo;
    GruBranchParams sem;
    Mat psi_weight;           // (branches*d_z) x (d_z*C)
    Mat psi_bias;             // 1 x (d_z*C)
    Mat head_weight;          // d_z x (T'*C)
    Mat head_bias;            // 1 x (T'*C)

    // psi input width follows the number of active branches.
    static GncdeParams init(const ModelDims& dims, const Ablation& ablation, std::mt19937_64& rng);
    static GncdeParams zeros(const ModelDims& dims, const Ablation& ablation);

    template <class Self, class F>
    static void visit(Self& self, F&& f) {
        f("gncde.W_Z", self.W_Z, false);
        GruBranchParams::visit(self.geo, "gncde.geo", f);
        GruBranchParams::visit(self.sem, "gncde.sem", f);
        f("gncde.psi.weight", self.psi_weight, false);
        f("gncde.psi.bias", self.psi_bias, true);
        f("gncde.head.weight", self.head_weight, false);
        f("gncde.head.bias", self.head_bias, true);
    }

    void check(const ModelDims& dims, const Ablation& ablation) const;
};

struct GruBranchVars {
    ad::Var W_z, W_r, W_h, b_z, b_r, b_h;
    static GruBranchVars bind(ad::Tape& tape, const GruBranchParams& p, bool requires_grad);
};

struct GncdeVars {
    ad::Var W_Z;
    GruBranchVars geo, sem;
    ad::Var psi_weight, psi_bias, head_weight, head_bias;
    static GncdeVars bind(ad::Tape& tape, const GncdeParams& p, bool requires_grad);
};

namespace gncde {

ad::Var init_state(ad::Var x0, const GncdeVars& p);
ad::Var mask_normalize(ad::Var adjacency, const Mat& mask);
ad::Var gru_graph_step(ad::Var state, ad::Var normalized, const GruBranchVars& p);
// N x (d_z*C) holding the [N x d_z x C] field.
ad::Var vector_field_g(ad::Var state, ad::Var fused, const Mat& geo_mask, const Mat& sem_mask, const GncdeVars& p,
                       const Ablation& ablation);
// N x (T'*C); column h*C + c is horizon h, channel c.
ad::Var forecast_head(ad::Var final_state, const GncdeVars& p);

}  // namespace gncde

// Everything the augmented right-hand side reads besides the state.
struct RhsContext {
    const ControlPath* path = nullptr;
    const CeggVars* cegg = nullptr;
    const GncdeVars* gncde = nullptr;
    ad::Var static_adjacency;  // unset when the static graph is ablated
    const Mat* geo_mask = nullptr;
    const Mat* sem_mask = nullptr;
    double beta = 0.5;
    Ablation ablation;
};

using VarState = AugmentedState<ad::Var>;
using Rhs = std::function<VarState(double, const VarState&)>;

// dH = f(H) . dX/ds and dZ = g(Z; A(s)) . dX/ds from one derivative lookup.
Rhs assemble_rhs(const RhsContext& ctx);

// Hidden-state field alone (dH = f(H) . dX/ds).
std::function<ad::Var(double, const ad::Var&)> assemble_hidden_rhs(const ControlPath& path, const CeggVars& cegg);

// Value-level entry points.
Mat init_state(const Mat& x0, const GncdeParams& params);
Mat mask_normalize(const Mat& adjacency, const MaskMatrix& mask);
Mat gru_graph_step(const Mat& state, const Mat& normalized, const GruBranchParams& params);
Mat vector_field_g(const Mat& state, const Mat& fused, const MaskMatrix& geo, const MaskMatrix& sem,
                   const GncdeParams& params, const Ablation& ablation);
// Returns the [T' x N x C] forecast.
Tensor3 forecast_head(const Mat& final_state, const GncdeParams& params, int horizon);
Tensor3 head_output_to_tensor(const Mat& head_output, int horizon, int channels);

}  // namespace cegncde
