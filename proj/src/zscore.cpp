#include "cegncde/zscore.hpp"

#include "cegncde/errors.hpp"

#include <cmath>

namespace cegncde {

ZScore ZScore::fit(const Tensor3& train) {
    const int c = train.channels();
    ZScore z;
    z.mean = Vec::Zero(c);
    z.std = Vec::Zero(c);
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        long count = 0;
        for (int t = 0; t < train.steps(); ++t)
            for (int n = 0; n < train.nodes(); ++n) {
                const double v = train(t, n, ch);
                if (std::isfinite(v)) {
                    sum += v;
                    ++count;
                }
            }
        if (count == 0) throw DataError("zscore: channel " + std::to_string(ch) + " has no finite values");
        const double mean = sum / count;
        double sq = 0.0;
        for (int t = 0; t < train.steps(); ++t)
            for (int n = 0; n < train.nodes(); ++n) {
                const double v = train(t, n, ch);
                if (std::isfinite(v)) sq += (v - mean) * (v - mean);
            }
        const double sd = std::sqrt(sq / count);
        if (!(sd > 0.0)) throw DataError("zscore: channel " + std::to_string(ch) + " has zero variance");
        z.mean(ch) = mean;
        z.std(ch) = sd;
    }
    return z;
}

Tensor3 ZScore::normalize(const Tensor3& x) const {
    if (x.channels() != channels()) throw ShapeError("zscore: channel count mismatch");
    Tensor3 out = x;
    for (int t = 0; t < x.steps(); ++t)
        for (int n = 0; n < x.nodes(); ++n)
            for (int c = 0; c < x.channels(); ++c) out(t, n, c) = (x(t, n, c) - mean(c)) / std(c);
    return out;
}

Tensor3 ZScore::denormalize(const Tensor3& x) const {
    if (x.channels() != channels()) throw ShapeError("zscore: channel count mismatch");
    Tensor3 out = x;
    for (int t = 0; t < x.steps(); ++t)
        for (int n = 0; n < x.nodes(); ++n)
            for (int c = 0; c < x.channels(); ++c) out(t, n, c) = x(t, n, c) * std(c) + mean(c);
    return out;
}

}  // namespace cegncde
