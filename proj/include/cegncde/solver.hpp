#pragma once

// Fixed-step explicit integrators for the controlled differential equations.
//
// The integration grid is aligned to unit-spaced knots starting at t_start;
// every knot interval is split into `steps_per_interval` equal steps, and the
// state is recorded at each knot (including t_end).

#include "cegncde/autodiff.hpp"
#include "cegncde/errors.hpp"
#include "cegncde/tensor.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace cegncde {

enum class SolverMethod { euler, rk4 };

SolverMethod parse_solver_method(const std::string& name);
std::string to_string(SolverMethod method);

struct SolverConfig {
    SolverMethod method = SolverMethod::rk4;
    int steps_per_interval = 1;
};

// Stacked (Z, H) integrated as one system.
template <class T>
struct AugmentedState {
    T Z;
    T H;
};

template <class T>
AugmentedState<T> operator+(const AugmentedState<T>& a, const AugmentedState<T>& b) {
    return {a.Z + b.Z, a.H + b.H};
}

template <class T>
AugmentedState<T> operator*(const AugmentedState<T>& a, double k) {
    return {a.Z * k, a.H * k};
}

inline bool state_finite(double x) { return std::isfinite(x); }
inline bool state_finite(const Mat& m) { return all_finite(m); }
inline bool state_finite(const ad::Var& v) { return all_finite(v.value()); }
template <class T>
bool state_finite(const AugmentedState<T>& s) {
    return state_finite(s.Z) && state_finite(s.H);
}

// Knot times t_start, t_start + 1, ... strictly below t_end, then t_end.
std::vector<double> knot_grid(double t_start, double t_end);

template <class State, class Rhs>
State solver_step(Rhs& rhs, const State& y, double t, double h, SolverMethod method) {
    if (method == SolverMethod::euler) return y + rhs(t, y) * h;
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + 0.5 * h, y + k1 * (0.5 * h));
    const State k3 = rhs(t + 0.5 * h, y + k2 * (0.5 * h));
    const State k4 = rhs(t + h, y + k3 * h);
    return y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
}

// Integrates dy/ds = rhs(s, y) and returns y at every knot of knot_grid().
// Throws NumericalError naming the solver time when the state turns non-finite.
template <class State, class Rhs>
std::vector<State> integrate(Rhs&& rhs, State initial, double t_start, double t_end, const SolverConfig& config) {
    if (!(t_start < t_end)) {
        std::ostringstream msg;
        msg << "integrate: t_start (" << t_start << ") must be < t_end (" << t_end << ")";
        throw std::invalid_argument(msg.str());
    }
    if (config.steps_per_interval < 1) throw ConfigError("integrate: steps_per_interval must be >= 1");

    const std::vector<double> knots = knot_grid(t_start, t_end);
    std::vector<State> trajectory;
    trajectory.reserve(knots.size());
    trajectory.push_back(initial);
    State y = std::move(initial);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k];
        const double b = knots[k + 1];
        const double h = (b - a) / config.steps_per_interval;
        for (int j = 0; j < config.steps_per_interval; ++j) {
            const double t = a + j * h;
            y = solver_step(rhs, y, t, h, config.method);
            if (!state_finite(y)) {
                std::ostringstream msg;
                msg << "integrate: non-finite state at solver time " << (j + 1 == config.steps_per_interval ? b : t + h);
                throw NumericalError(msg.str());
            }
        }
        trajectory.push_back(y);
    }
    return trajectory;
}

// Scalar test problem with a closed-form solution on [t_start, t_end].
struct ScalarProblem {
    std::function<double(double, double)> rhs;
    std::function<double(double)> exact;
    double y0 = 1.0;
    double t_start = 0.0;
    double t_end = 1.0;
};

// Absolute error at t_end using `steps` equal steps over the whole span.
double global_error(SolverMethod method, const ScalarProblem& problem, int steps);

// log2(error(h) / error(h/2)) with h = span / base_steps. Refuses when an
// error underflows 1e-14.
double convergence_order(SolverMethod method, const ScalarProblem& problem, int base_steps = 8);

}  // namespace cegncde
