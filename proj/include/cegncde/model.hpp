#pragma once

// The complete forecaster: parameters plus everything a forward pass reads
// (masks, normalization, solver settings).

#include "cegncde/cegg.hpp"
#include "cegncde/gncde.hpp"
#include "cegncde/masks.hpp"
#include "cegncde/solver.hpp"
#include "cegncde/zscore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cegncde {

struct ModelParams {
    CeggParams cegg;
    GncdeParams gncde;

    static ModelParams init(const ModelDims& dims, const Ablation& ablation, std::uint64_t seed);
    static ModelParams zeros(const ModelDims& dims, const Ablation& ablation);

    template <class Self, class F>
    static void visit(Self& self, F&& f) {
        CeggParams::visit(self.cegg, f);
        GncdeParams::visit(self.gncde, f);
    }

    ModelParams zeros_like() const;
    std::vector<std::string> names() const;
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;
    std::size_t scalar_count() const;
    void check(const ModelDims& dims, const Ablation& ablation) const;
};

struct BoundModel {
    CeggVars cegg;
    GncdeVars gncde;
    // Leaves in ModelParams::visit order.
    std::vector<ad::Var> leaves;

    static BoundModel bind(ad::Tape& tape, const ModelParams& params, bool requires_grad);
};

struct Model {
    ModelDims dims;
    Ablation ablation;
    double beta = 0.5;
    SolverConfig solver;
    MaskMatrix geo_mask;
    MaskMatrix sem_mask;
    ZScore scaler;
    ModelParams params;

    void check() const;
};

// Records the full forward pass for one raw-scale input window [T x N x C]
// and returns the raw-scale prediction as N x (T'*C).
ad::Var forward(ad::Tape& tape, const BoundModel& bound, const Model& model, const Tensor3& window);

// Raw-scale forecast [T' x N x C].
Tensor3 predict(const Model& model, const Tensor3& window);

// Layout helpers between [T' x N x C] tensors and the N x (T'*C) head layout.
Mat horizon_tensor_to_head(const Tensor3& x);

// Joint (Z, H) trajectory at the knots of the normalized window.
std::vector<AugmentedState<Mat>> joint_trajectory(const Model& model, const Tensor3& window);
// H alone, integrated with the hidden-state field on the same grid.
std::vector<Mat> hidden_trajectory(const Model& model, const Tensor3& window);

// mask_normalize(A(t), M_sem) for solver time t in [0, T-1].
Mat semantic_adjacency_at(const Model& model, const Tensor3& window, double time);

}  // namespace cegncde
