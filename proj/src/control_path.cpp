#include "cegncde/control_path.hpp"

#include "cegncde/errors.hpp"

#include <cmath>
#include <sstream>

namespace cegncde {

ObservationSeries ObservationSeries::regular(Tensor3 values) {
    ObservationSeries s;
    s.times.resize(static_cast<std::size_t>(values.steps()));
    for (std::size_t i = 0; i < s.times.size(); ++i) s.times[i] = static_cast<double>(i);
    s.values = std::move(values);
    return s;
}

namespace {

// Second derivatives of the natural cubic spline through y on unit-spaced
// knots, via the Thomas algorithm on M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]).
std::vector<double> natural_second_derivatives(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    const std::size_t inner = n - 2;
    std::vector<double> diag(inner, 4.0), rhs(inner);
    for (std::size_t i = 0; i < inner; ++i) rhs[i] = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
    for (std::size_t i = 1; i < inner; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for (std::size_t i = inner - 1; i-- > 0;) m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    return m;
}

}  // namespace

ControlPath fit_path(const ObservationSeries& series) {
    const Tensor3& v = series.values;
    const int steps = v.steps();
    if (steps < 2) throw DataError("fit_path: need at least 2 time steps, got " + std::to_string(steps));
    if (series.times.size() != static_cast<std::size_t>(steps)) {
        throw ShapeError("fit_path: " + std::to_string(series.times.size()) + " times for " + std::to_string(steps) +
                         " steps");
    }
    for (int t = 1; t < steps; ++t) {
        if (!(series.times[t] > series.times[t - 1])) {
            std::ostringstream msg;
            msg << "fit_path: times not strictly increasing at index " << t << " (" << series.times[t - 1] << " -> "
                << series.times[t] << ")";
            throw DataError(msg.str());
        }
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v.data()[k])) throw DataError("fit_path: non-finite value; fill missing entries first");
    }

    ControlPath path;
    path.knots_ = steps;
    path.nodes_ = v.nodes();
    path.channels_ = v.channels();
    path.original_times_ = series.times;
    path.coefficients_.assign(static_cast<std::size_t>(steps - 1) * v.nodes() * v.channels() * 4, 0.0);

    path.last_ = v.step(steps - 1);

    std::vector<double> y(static_cast<std::size_t>(steps));
    for (int n = 0; n < v.nodes(); ++n) {
        for (int c = 0; c < v.channels(); ++c) {
            for (int t = 0; t < steps; ++t) y[t] = v(t, n, c);
            const std::vector<double> m = natural_second_derivatives(y);
            for (int i = 0; i + 1 < steps; ++i) {
                double* coef = &path.coefficients_[path.offset(i, n, c)];
                coef[0] = y[i];
                coef[1] = (y[i + 1] - y[i]) - (2.0 * m[i] + m[i + 1]) / 6.0;
                coef[2] = m[i] / 2.0;
                coef[3] = (m[i + 1] - m[i]) / 6.0;
            }
        }
    }
    return path;
}

int ControlPath::locate(double s, double& local) const {
    if (!(s >= 0.0 && s <= t_end())) {
        std::ostringstream msg;
        msg << "ControlPath: s = " << s << " outside [0, " << t_end() << "]";
        throw DataError(msg.str());
    }
    int interval = static_cast<int>(std::floor(s));
    if (interval > knots_ - 2) interval = knots_ - 2;
    local = s - interval;
    return interval;
}

Mat ControlPath::value(double s) const {
    double u = 0.0;
    const int i = locate(s, u);
    if (u == 1.0) return last_;
    Mat out(nodes_, channels_);
    for (int n = 0; n < nodes_; ++n)
        for (int c = 0; c < channels_; ++c) {
            const double* k = &coefficients_[offset(i, n, c)];
            out(n, c) = u == 0.0 ? k[0] : k[0] + u * (k[1] + u * (k[2] + u * k[3]));
        }
    return out;
}

Mat ControlPath::derivative(double s) const {
    double u = 0.0;
    const int i = locate(s, u);
    Mat out(nodes_, channels_);
    for (int n = 0; n < nodes_; ++n)
        for (int c = 0; c < channels_; ++c) {
            const double* k = &coefficients_[offset(i, n, c)];
            out(n, c) = k[1] + u * (2.0 * k[2] + 3.0 * u * k[3]);
        }
    return out;
}

double ControlPath::coefficient(int interval, int node, int channel, int k) const {
    return coefficients_.at(offset(interval, node, channel) + static_cast<std::size_t>(k));
}

Mat eval_path(const ControlPath& path, double s) { return path.value(s); }
Mat eval_derivative(const ControlPath& path, double s) { return path.derivative(s); }

}  // namespace cegncde
