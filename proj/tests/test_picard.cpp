#include "support.hpp"

#include "levynls/picard.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace levynls;

namespace {

JumpPath empty_path(double T)
{
    JumpPath p;
    p.horizon = T;
    return p;
}

}  // namespace

TEST_CASE("without the nonlinearity the iteration is exact after one step")
{
    const Grid g(1, 256, 40.0);
    const Field x = test::gaussian(g, 1.0, 1.0);
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 0.8, 4.0), 0.5, g);
    const NoiseModel m{g, {{3.0, z}}};
    const auto path = sample_jump_path(m, 0.5, 8, 0);
    SolverConfig cfg;
    cfg.nonlinear = false;
    cfg.T = 0.5;
    cfg.dt = 5e-3;
    const auto rep = picard_solve(x, path, m, cfg, kInf, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.residuals.front() == 0.0);

    Field expected = free_propagate(x, 0.5, g);
    const Field mt = stochastic_convolution(path, m, 0.5);
    for (std::size_t j = 0; j < expected.size(); ++j) expected[j] += mt[j];
    CHECK(test::max_abs_diff(rep.trajectory.fields.back(), expected) < 1e-12);

    const auto split = solve_path(x, path, m, cfg);
    CHECK(rep.trajectory.times == split.times);
    CHECK(y_distance(rep.trajectory, split, g, 8.0, 4.0) < 1e-12);
}

TEST_CASE("deterministic short horizon: geometric decay of the residuals")
{
    const Grid g(1, 256, 40.0);
    const Field x = test::gaussian(g, 1.0, 1.0);
    SolverConfig cfg;
    cfg.T = 0.05;
    cfg.dt = 1e-3;
    const auto rep = picard_solve(x, empty_path(cfg.T), NoiseModel{g, {}}, cfg, kInf, 40);
    CHECK(rep.converged);
    const auto ratios = rep.ratios();
    REQUIRE(ratios.size() >= 5);
    for (double r : ratios) CHECK(r < 1.0);
    // A Volterra-type iteration contracts at least geometrically: every ratio
    // stays well inside the unit interval, none drifts toward 1.
    const double worst = *std::max_element(ratios.begin(), ratios.end());
    CHECK(worst < 0.2);
    for (std::size_t i = 0; i < rep.residuals.size(); ++i)
        CHECK(rep.residuals[i] <= rep.residuals.front() * std::pow(worst, static_cast<double>(i)) * (1.0 + 1e-12));
}

TEST_CASE("fixed point agrees with the split-step solution")
{
    const Grid g(1, 256, 40.0);
    const Field x = test::gaussian(g, 0.8, 1.0);
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 0.8, 2.0), 0.4, g);
    const NoiseModel m{g, {{4.0, z}}};
    const auto path = sample_jump_path(m, 0.3, 21, 0);
    SolverConfig cfg;
    cfg.T = 0.3;
    cfg.dt = 1e-3;
    const auto rep = picard_solve(x, path, m, cfg, 50.0, 80);
    REQUIRE(rep.converged);
    cfg.truncation_R = 50.0;
    const auto split = solve_path(x, path, m, cfg);
    REQUIRE(rep.trajectory.times == split.times);
    CHECK(y_distance(rep.trajectory, split, g, 8.0, 4.0) < 1e-3);
}

TEST_CASE("argument validation")
{
    const Grid g(1, 64, 10.0);
    SolverConfig cfg;
    CHECK_THROWS(picard_solve(test::gaussian(g, 1.0, 1.0), empty_path(1.0), NoiseModel{g, {}}, cfg, kInf, 0));
    CHECK_THROWS(picard_solve(Field(5), empty_path(1.0), NoiseModel{g, {}}, cfg, kInf, 5));
}
