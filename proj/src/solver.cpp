#include "cegncde/solver.hpp"

namespace cegncde {

SolverMethod parse_solver_method(const std::string& name) {
    if (name == "euler") return SolverMethod::euler;
    if (name == "rk4") return SolverMethod::rk4;
    throw ConfigError("unknown solver method '" + name + "' (expected euler or rk4)");
}

std::string to_string(SolverMethod method) { return method == SolverMethod::euler ? "euler" : "rk4"; }

std::vector<double> knot_grid(double t_start, double t_end) {
    std::vector<double> knots;
    for (int k = 0;; ++k) {
        const double t = t_start + k;
        if (t >= t_end) break;
        knots.push_back(t);
    }
    knots.push_back(t_end);
    return knots;
}

double global_error(SolverMethod method, const ScalarProblem& problem, int steps) {
    if (steps < 1) throw std::invalid_argument("global_error: steps must be >= 1");
    const double h = (problem.t_end - problem.t_start) / steps;
    double y = problem.y0;
    auto rhs = [&](double t, double v) { return problem.rhs(t, v); };
    for (int j = 0; j < steps; ++j) y = solver_step(rhs, y, problem.t_start + j * h, h, method);
    return std::abs(y - problem.exact(problem.t_end));
}

double convergence_order(SolverMethod method, const ScalarProblem& problem, int base_steps) {
    const double coarse = global_error(method, problem, base_steps);
    const double fine = global_error(method, problem, 2 * base_steps);
    if (coarse < 1e-14 || fine < 1e-14) {
        std::ostringstream msg;
        msg << "convergence_order: error underflow (" << coarse << ", " << fine << "); use a coarser grid";
        throw NumericalError(msg.str());
    }
    return std::log2(coarse / fine);
}

}  // namespace cegncde
