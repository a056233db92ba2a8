#include "cegncde/errors.hpp"
#include "cegncde/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace cegncde;

namespace {

ScalarProblem growth(double rate) {
    ScalarProblem p;
    p.rhs = [rate](double, double z) { return rate * z; };
    p.exact = [rate](double t) { return std::exp(rate * t); };
    return p;
}

}  // namespace

TEST_CASE("zero field keeps the state constant at every knot") {
    const AugmentedState<Mat> init{Mat::Constant(2, 3, 1.5), Mat::Constant(2, 2, -0.5)};
    auto rhs = [](double, const AugmentedState<Mat>& s) {
        return AugmentedState<Mat>{Mat::Zero(s.Z.rows(), s.Z.cols()), Mat::Zero(s.H.rows(), s.H.cols())};
    };
    const auto traj = integrate(rhs, init, 0.0, 4.0, SolverConfig{SolverMethod::rk4, 3});
    REQUIRE(traj.size() == 5);
    for (const auto& s : traj) {
        CHECK(s.Z == init.Z);
        CHECK(s.H == init.H);
    }
}

TEST_CASE("one Euler step of dz/ds = z doubles the state") {
    auto rhs = [](double, double z) { return z; };
    const auto traj = integrate(rhs, 1.0, 0.0, 1.0, SolverConfig{SolverMethod::euler, 1});
    CHECK(traj.back() == 2.0);
}

TEST_CASE("rk4 on dz/ds = z approaches e") {
    auto rhs = [](double, double z) { return z; };
    // classical RK4 multiplies by 1 + h + h^2/2 + h^3/6 + h^4/24 per step
    const double h = 0.1;
    const double amp = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
    const auto ten = integrate(rhs, 1.0, 0.0, 1.0, SolverConfig{SolverMethod::rk4, 10});
    CHECK(ten.back() == doctest::Approx(std::pow(amp, 10)).epsilon(1e-14));
    CHECK(std::abs(ten.back() - std::exp(1.0)) == doctest::Approx(2.0843e-6).epsilon(1e-3));
    const auto fine = integrate(rhs, 1.0, 0.0, 1.0, SolverConfig{SolverMethod::rk4, 13});
    CHECK(std::abs(fine.back() - std::exp(1.0)) <= 1e-6);
}

TEST_CASE("empirical convergence orders") {
    const double e1 = convergence_order(SolverMethod::euler, growth(1.0));
    const double e4 = convergence_order(SolverMethod::rk4, growth(1.0));
    const double e4n = convergence_order(SolverMethod::rk4, growth(-2.0));
    CHECK(e1 >= 0.8);
    CHECK(e1 <= 1.2);
    CHECK(e4 >= 3.5);
    CHECK(e4 <= 4.5);
    CHECK(e4n >= 3.5);
    CHECK(e4n <= 4.5);
}

TEST_CASE("order estimate refuses underflowing errors") {
    ScalarProblem p;
    p.rhs = [](double, double) { return 1.0; };
    p.exact = [](double t) { return 1.0 + t; };
    CHECK_THROWS_AS(convergence_order(SolverMethod::rk4, p), NumericalError);
}

TEST_CASE("linear rhs is linear in the initial condition") {
    auto rhs = [](double t, double z) { return std::sin(t) * z; };
    const SolverConfig cfg{SolverMethod::rk4, 2};
    const auto a = integrate(rhs, 0.7, 0.0, 5.0, cfg);
    const auto b = integrate(rhs, 0.7 * 3.5, 0.0, 5.0, cfg);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(b[k] - 3.5 * a[k]) <= 1e-10);
}

TEST_CASE("error does not grow as steps per interval double") {
    const ScalarProblem p = growth(1.0);
    for (SolverMethod m : {SolverMethod::euler, SolverMethod::rk4}) {
        double prev = global_error(m, p, 1);
        for (int steps : {2, 4, 8}) {
            const double err = global_error(m, p, steps);
            CHECK(err <= prev);
            prev = err;
        }
    }
}

TEST_CASE("trajectory is reported exactly at the knots") {
    const auto grid = knot_grid(0.0, 3.0);
    CHECK(grid == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    std::vector<double> seen;
    auto rhs = [&](double t, double z) {
        seen.push_back(t);
        return z;
    };
    integrate(rhs, 1.0, 0.0, 2.0, SolverConfig{SolverMethod::euler, 4});
    CHECK(seen == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75});
}

TEST_CASE("non-finite states abort with the solver time") {
    auto rhs = [](double t, double z) { return t > 1.5 ? std::nan("") : z; };
    try {
        integrate(rhs, 1.0, 0.0, 3.0, SolverConfig{SolverMethod::euler, 1});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("solver time 3") != std::string::npos);
    }
}

TEST_CASE("empty or reversed interval is rejected") {
    auto rhs = [](double, double z) { return z; };
    CHECK_THROWS_AS(integrate(rhs, 1.0, 1.0, 1.0, SolverConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(integrate(rhs, 1.0, 2.0, 1.0, SolverConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(integrate(rhs, 1.0, 0.0, 1.0, SolverConfig{SolverMethod::rk4, 0}), ConfigError);
}

TEST_CASE("method names round-trip") {
    CHECK(parse_solver_method("euler") == SolverMethod::euler);
    CHECK(to_string(parse_solver_method("rk4")) == "rk4");
    CHECK_THROWS_AS(parse_solver_method("dopri5"), ConfigError);
}
