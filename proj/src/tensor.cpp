#include "cegncde/tensor.hpp"

#include "cegncde/errors.hpp"

#include <cmath>

namespace cegncde {

std::string shape_string(const Mat& m) {
    return "[" + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) + "]";
}

void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(what + ": expected [" + std::to_string(rows) + " x " + std::to_string(cols) +
                         "], got " + shape_string(m));
    }
}

bool all_finite(const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i])) return false;
    }
    return true;
}

Tensor3::Tensor3(int steps, int nodes, int channels, double fill)
    : steps_(steps), nodes_(nodes), channels_(channels),
      data_(static_cast<std::size_t>(steps) * nodes * channels, fill) {
    if (steps < 0 || nodes < 0 || channels < 0) throw ShapeError("Tensor3: negative extent");
}

Mat Tensor3::step(int t) const {
    Mat out(nodes_, channels_);
    for (int n = 0; n < nodes_; ++n)
        for (int c = 0; c < channels_; ++c) out(n, c) = (*this)(t, n, c);
    return out;
}

void Tensor3::set_step(int t, const Mat& values) {
    require_shape(values, nodes_, channels_, "Tensor3::set_step");
    for (int n = 0; n < nodes_; ++n)
        for (int c = 0; c < channels_; ++c) (*this)(t, n, c) = values(n, c);
}

Tensor3 Tensor3::slice(int begin, int end) const {
    if (begin < 0 || end > steps_ || begin > end) {
        throw ShapeError("Tensor3::slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + std::to_string(steps_) + " steps");
    }
    Tensor3 out(end - begin, nodes_, channels_);
    const std::size_t stride = static_cast<std::size_t>(nodes_) * channels_;
    std::copy(data_.begin() + begin * stride, data_.begin() + end * stride, out.data_.begin());
    return out;
}

}  // namespace cegncde
