#pragma once

#include "cegncde/tensor.hpp"

#include <random>
#include <string>

namespace cegncde {

struct ModelDims {
    int nodes = 0;
    int channels = 1;
    int window = 12;     // T, input steps
    int horizon = 12;    // T', forecast steps
    int hidden_h = 64;   // d_h
    int hidden_z = 64;   // d_z
    int layers = 3;      // L
    int qk_dim = 32;     // d
    int embed_dim = 8;   // d_e

    void validate() const;
};

// Variants with one component removed.
struct Ablation {
    bool no_mask = false;    // both masks replaced by all-ones
    bool no_gvf = false;     // geographic branch dropped
    bool no_svf = false;     // semantic branch dropped
    bool no_static = false;  // static adjacency dropped (beta forced to 0)

    static Ablation parse(const std::string& name);
    std::string name() const;
    int active_branches() const { return (no_gvf ? 0 : 1) + (no_svf ? 0 : 1); }
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Mat uniform_init(Eigen::Index rows, Eigen::Index cols, int fan_in, std::mt19937_64& rng);

}  // namespace cegncde
