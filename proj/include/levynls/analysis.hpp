/*
 * analysis.hpp — verification instruments
 *
 *  - mass_balance: pathwise reconstruction of ‖X(t)‖^q from the drift and
 *    the jump increments.
 *  - ito_martingale_term: the compensated jump integral in the expansion
 *    of ‖X(t)‖^q, whose ensemble mean must vanish.
 *  - elementary_inequality_check: |‖a+b‖^q − ‖b‖^q| ≤ 2^q(‖a‖^q + ‖b‖^q).
 *  - tau_R, sigma_sequence: the stopping times, with generic constants
 *    replaced by a supplied estimate Ĉ.
 *  - f_roots: the two positive roots of K + x^α/(4(2K)^{α−1}) − x.
 *  - strichartz_*: empirical constants of the homogeneous, inhomogeneous and
 *    stochastic Strichartz inequalities on a finite horizon.
 */

#pragma once

#include "levynls/dynamics.hpp"
#include "levynls/noise.hpp"
#include "levynls/spectral.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace levynls {

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // population standard deviation / √n
    std::size_t count = 0;
};

/// Sample mean with a fixed (pairwise) summation order.
MeanEstimate estimate_mean(std::span<const double> values);

struct MassBalanceReport {
    double q = 2.0;
    std::vector<double> times;
    std::vector<double> residual_series;
    double max_abs_residual = 0.0;
    /// max over jumps of ‖X(s) − (X(s−) + z)‖_{L²}.
    double max_jump_mismatch = 0.0;
};

/**
 * Residual(t) = ‖X(t)‖^q − ‖x‖^q − ∫_0^t −q‖X‖^{q−2} Re⟨X, μ⟩ ds − Σ_{s≤t} (‖X(s−)+z‖^q − ‖X(s−)‖^q),
 * the drift integral by the left-endpoint rule on the trajectory samples.
 * Needs stored fields. Throws std::invalid_argument if path and trajectory disagree.
 */
MassBalanceReport mass_balance(const Trajectory& traj, const JumpPath& path, const NoiseModel& m, double q);

/// Σ_{jumps ≤ T}(‖X(s−)+z‖^q − ‖X(s−)‖^q) − ∫_0^T Σ_j λ_j(‖X+z_j‖^q − ‖X‖^q) ds, left-endpoint in time.
double ito_martingale_term(const Trajectory& traj, const JumpPath& path, const NoiseModel& m, double q);

/// |‖a+b‖^q − ‖b‖^q| / (‖a‖^q + ‖b‖^q); 0 when both vanish.
double elementary_ratio(std::span<const cplx> a, std::span<const cplx> b, double q, const Grid& g);
/// Maximum ratio over random field pairs. Throws for q < 2.
double elementary_inequality_check(double q, std::size_t n_samples, std::uint64_t seed);

/// First sample time at which the Y-norm exceeds R; the horizon when it never does.
double tau_R(const Trajectory& traj, double R, double p);
double tau_R(const NormSeries& ns, double horizon, double R, double p);

struct StoppingParams {
    double C_hat = 1.0;
    double alpha = 3.0;
    int d = 1;
    double p = 8.0;
    double T = 1.0;
    double R = kInf;  // only used for the tau_R field
};

struct StoppingReport {
    double tau_R = 0.0;
    std::vector<double> sigma;     // σ^1 < σ^2 < … ending at T
    double M_R = 0.0;              // Ĉ sup‖Z‖_{L²} + ‖M‖_{L^p(0,T;L^r)}
    double T_R_lower_bound = 0.0;  // T ∧ (4Ĉ(2M_R)^{α−1})^{−1/(1−(α−1)d/4)}
    std::size_t n_intervals = 0;

    double min_increment() const;
};

/// Time exponent 1 − (α−1)d/4 of the local nonlinear estimate.
double local_time_exponent(double alpha, int d);

/**
 * σ^{j+1} = inf{t > σ^j : Ĉ(t−σ^j)^{e}(Ĉ sup_{[σ^j,t)}‖Z‖_{L²} + ‖M‖_{L^p(σ^j,t;L^r)})^{α−1} > 2^{−(α+1)}},
 * σ^0 = 0, evaluated at the sample times of z_norms. m_norms carries ‖M(t)‖_{L^r}
 * on the same or any increasing time grid.
 */
StoppingReport sigma_sequence(const NormSeries& z_norms, const NormSeries& m_norms, const StoppingParams& sp);

/// (c1, c2) with f(c1) = f(c2) = 0, c1 < 2K < c2, by bisection.
std::pair<double, double> f_roots(double K, double alpha);
double root_function(double x, double K, double alpha);

struct StrichartzReport {
    AdmissiblePair pair{};
    AdmissiblePair source_pair{};  // (γ,ρ) for the inhomogeneous estimate
    std::size_t sample_count = 0;
    double ratio_max = 0.0;
    double ratio_mean = 0.0;
    double ratio_stderr = 0.0;
    double energy_ratio_max = 0.0;   // L^∞L² ratio, inhomogeneous only
    double energy_ratio_mean = 0.0;
    double lhs_mean = 0.0;           // stochastic only: E‖M‖^q
    double lhs_stderr = 0.0;
    double rhs = 0.0;                // stochastic only: (m₂T)^{q/2} + q_moment(q)·T
    double q = 0.0;
    int d = 1;
    std::size_t n = 0;
    double box_length = 0.0;
    std::size_t time_steps = 0;
    double horizon = 0.0;
};

/// ‖S_·φ‖_{L^p(0,T;L^r)} / ‖φ‖_{L²} per sample, left-endpoint in time with time_steps steps.
double homogeneous_ratio(const Field& phi, AdmissiblePair pr, double T, std::size_t time_steps, const Grid& g);
StrichartzReport strichartz_homog(std::span<const Field> phis, AdmissiblePair pr, double T,
                                  std::size_t time_steps, const Grid& g);

/// Φ_f(t_m) = Σ_{l<m} S_{t_m−t_l} f_l·dt for m = 0..N, N = f.size().
std::vector<Field> duhamel_series(std::span<const Field> f, double dt, const Grid& g);

/// f sampled at t_m = m·T/N, m = 0..N−1, for each ensemble member.
StrichartzReport strichartz_inhom(const std::vector<std::vector<Field>>& f_ensemble, AdmissiblePair source,
                                  AdmissiblePair target, double T, const Grid& g);

/// Monte Carlo Ĉ_q = E‖M‖^q_{L^p(0,T;L^r)} / [(m₂T)^{q/2} + q_moment(q)·T].
StrichartzReport strichartz_stoch(const NoiseModel& m, double q, AdmissiblePair pr, double T,
                                  std::size_t time_steps, std::size_t n_paths, std::uint64_t seed,
                                  unsigned workers = 0);

/// ‖M(t_k)‖_{L^r} on the given times.
NormSeries convolution_norms(const JumpPath& path, const NoiseModel& m, std::span<const double> times, double r);

}  // namespace levynls
