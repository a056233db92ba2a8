#pragma once

// Small, fully seeded model-plus-data problems for gradient checks and
// oracle comparisons.

#include "cegncde/data_io.hpp"
#include "cegncde/model.hpp"

#include <cstdint>
#include <vector>

namespace cegncde {

struct MicroSpec {
    int nodes = 4;
    int channels = 1;
    int window = 6;
    int horizon = 2;
    int hidden = 4;  // d_h and d_z
    int qk_dim = 4;
    int embed_dim = 2;
    int layers = 3;
    int batch = 2;
    double beta = 0.5;
    std::uint64_t seed = 1;
    SolverConfig solver{SolverMethod::rk4, 1};
    Ablation ablation;
};

struct MicroProblem {
    Model model;
    std::vector<WindowedSample> batch;
};

// Series are seeded sinusoids; the geographic mask links line neighbours and
// the semantic mask is DTW top-1 on the generated series.
MicroProblem make_micro_problem(const MicroSpec& spec);

}  // namespace cegncde
