#pragma once

#include "cegncde/tensor.hpp"

namespace cegncde {

// Per-channel z-score statistics, fitted on the training split only.
struct ZScore {
    Vec mean;  // per channel
    Vec std;   // per channel

    // Throws DataError when a channel has zero variance or no finite values.
    static ZScore fit(const Tensor3& train);

    Tensor3 normalize(const Tensor3& x) const;
    Tensor3 denormalize(const Tensor3& x) const;
    int channels() const { return static_cast<int>(mean.size()); }
};

}  // namespace cegncde
