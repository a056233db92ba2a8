#pragma once

// Binary geographic and semantic neighbour masks.

#include "cegncde/tensor.hpp"

#include <string>
#include <vector>

namespace cegncde {

enum class MaskKind { geographic, semantic };

struct MaskMatrix {
    Mat values;  // N x N, entries 0 or 1, unit diagonal
    MaskKind kind = MaskKind::geographic;

    static MaskMatrix all_ones(int nodes, MaskKind kind);
    int nodes() const { return static_cast<int>(values.rows()); }
};

struct DistanceEntry {
    int from = 0;
    int to = 0;
    double distance = 0.0;
};

using DistanceTable = std::vector<DistanceEntry>;

// M(i, j) = 1 iff a listed distance(i, j) < threshold, or i == j. Unlisted
// pairs count as infinitely far; the table is not symmetrized.
MaskMatrix geographic_mask(const DistanceTable& table, double threshold, int nodes);

// Classical DTW with absolute-difference cost and steps (1,0), (0,1), (1,1).
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b);

// Bucket means so the result holds at most `max_points` values.
std::vector<double> downsample_mean(const std::vector<double>& x, std::size_t max_points);

// For each node, ones at the K other nodes with the smallest DTW distance
// (ties to the lower index) plus the diagonal. Uses channel 0 of `series`,
// downsampled to at most `max_points` per node. Pairwise distances are
// spread over `threads` workers; the result does not depend on scheduling.
MaskMatrix semantic_mask(const Tensor3& series, int k, std::size_t max_points = 288, int threads = 1);

// "from,to,cost" CSV with integer node indices.
DistanceTable read_distance_table(const std::string& path);

// One row of 0/1 per node.
void write_mask_csv(const MaskMatrix& mask, const std::string& path);
MaskMatrix read_mask_csv(const std::string& path, MaskKind kind);

}  // namespace cegncde
