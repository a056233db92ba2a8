#pragma once

// Natural cubic spline control paths over discrete observations.

#include "cegncde/tensor.hpp"

#include <vector>

namespace cegncde {

struct ObservationSeries {
    Tensor3 values;              // [T x N x C]
    std::vector<double> times;   // length T, strictly increasing
    std::vector<bool> missing;   // T*N*C marks in Tensor3 order; empty means none missing

    // Series sampled at t = 0, 1, ..., T-1 with nothing missing.
    static ObservationSeries regular(Tensor3 values);
};

// Piecewise cubic X(s) on the normalized knot grid 0, 1, ..., T-1. The
// observation times only fix the ordering; evaluation is in knot units.
class ControlPath {
public:
    int knot_count() const { return knots_; }
    int nodes() const { return nodes_; }
    int channels() const { return channels_; }
    double t_begin() const { return 0.0; }
    double t_end() const { return static_cast<double>(knots_ - 1); }

    // X(s), N x C.
    Mat value(double s) const;
    // dX/ds, N x C.
    Mat derivative(double s) const;

    // Coefficient k (0..3) of the local monomial a + b u + c u^2 + d u^3 on
    // interval `interval`, u = s - interval.
    double coefficient(int interval, int node, int channel, int k) const;

    const std::vector<double>& original_times() const { return original_times_; }

private:
    friend ControlPath fit_path(const ObservationSeries& series);

    // Locates the interval holding s and its local offset; throws outside [0, T-1].
    int locate(double s, double& local) const;
    std::size_t offset(int interval, int node, int channel) const {
        return ((static_cast<std::size_t>(interval) * nodes_ + node) * channels_ + channel) * 4;
    }

    int knots_ = 0;
    int nodes_ = 0;
    int channels_ = 0;
    std::vector<double> coefficients_;  // [(T-1) x N x C x 4]
    Mat last_;                          // observation at the final knot
    std::vector<double> original_times_;
};

// Fits a natural cubic spline through every node/channel sequence. Requires
// T >= 2, strictly increasing times, and finite values (missing entries
// must already be filled).
ControlPath fit_path(const ObservationSeries& series);

Mat eval_path(const ControlPath& path, double s);
Mat eval_derivative(const ControlPath& path, double s);

}  // namespace cegncde
