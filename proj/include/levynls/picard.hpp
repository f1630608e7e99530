#pragma once

#include "levynls/dynamics.hpp"

#include <cstddef>
#include <vector>

namespace levynls {

struct PicardReport {
    std::size_t iterations = 0;
    std::vector<double> residuals;  // ‖Z_{n+1} − Z_n‖_{Y_T}, one per iteration
    bool converged = false;
    double tolerance = 0.0;
    Trajectory trajectory;          // last iterate, sampled like solve_path

    /// residual_{n+1}/residual_n.
    std::vector<double> ratios() const;
};

/// Default stopping tolerance 1e−10·(1 + ‖x‖_{L²}).
double default_picard_tolerance(const Field& x, const Grid& g);

/**
 * Fixed-point iteration of the truncated mild equation on a frozen jump path:
 *
 *   Z_{n+1}(t) = S_t x − iλ ∫_0^t S_{t−s}(θ_R(‖Z_n‖_{Y_s}) |Z_n|^{α−1} Z_n)(s) ds + M(t)
 *
 * on the same node grid solve_path uses, with the Duhamel integral by the
 * left-endpoint rule and Z_0 = S_t x + M(t). The stochastic convolution is
 * computed once. A negative tol selects default_picard_tolerance.
 * Non-convergence after n_max iterations is reported through the flag.
 */
PicardReport picard_solve(const Field& x, const JumpPath& path, const NoiseModel& model,
                          const SolverConfig& cfg, double R, std::size_t n_max, double tol = -1.0);

}  // namespace levynls
