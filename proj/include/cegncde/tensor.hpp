#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace cegncde {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

std::string shape_string(const Mat& m);

// Throws ShapeError naming `what` when `m` is not rows x cols.
void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const std::string& what);

bool all_finite(const Mat& m);

// Dense rank-3 tensor laid out as [time][node][channel], row-major.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int steps, int nodes, int channels, double fill = 0.0);

    int steps() const { return steps_; }
    int nodes() const { return nodes_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int t, int n, int c) { return data_[index(t, n, c)]; }
    double operator()(int t, int n, int c) const { return data_[index(t, n, c)]; }

    // Slice [t] as an N x C matrix.
    Mat step(int t) const;
    void set_step(int t, const Mat& values);

    // Rows [begin, end) along the time axis.
    Tensor3 slice(int begin, int end) const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t index(int t, int n, int c) const {
        return (static_cast<std::size_t>(t) * nodes_ + n) * channels_ + c;
    }

    int steps_ = 0;
    int nodes_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

}  // namespace cegncde
