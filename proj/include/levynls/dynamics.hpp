/*
 * dynamics.hpp — event-driven split-step integration
 *
 * Between jumps the state obeys
 *
 *   du = i[Δu − c·λ|u|^{α−1}u] dt − μ dt,   c = θ_R(‖u‖_{Y_t}),
 *
 * integrated with Strang splitting: half a nonlinear phase rotation, an
 * exact linear-plus-drift step in Fourier space, another half rotation.
 * At each jump time s the enclosing step is split and u(s) = u(s−) + z.
 */

#pragma once

#include "levynls/noise.hpp"
#include "levynls/spectral.hpp"

#include <stdexcept>
#include <vector>

namespace levynls {

/// Cubic smoothstep cutoff: 1 on [0,1], 0 on [2,∞), slope ≥ −1.5.
double theta(double x);
double theta_R(double x, double R);

struct SolverConfig {
    double alpha = 3.0;
    double lambda = 1.0;
    double dt = 1e-3;
    double T = 1.0;
    double truncation_R = kInf;
    bool nonlinear = true;

    AdmissiblePair pair(int d) const { return pair_for_exponent(alpha, d); }
    /// Throws std::invalid_argument unless 1 < α < 1+4/d, λ = ±1, dt > 0, T > 0, R ≥ 1.
    void validate(int d) const;
};

/// u ← u·exp(−iλc|u|^{α−1}dt), node-wise exact flow of i u_t = cλ|u|^{α−1}u.
void nonlinear_phase_step(std::span<cplx> u, double dt, double lambda, double alpha, double coefficient = 1.0);
Field nonlinear_phase_step(const Field& u, double dt, double lambda, double alpha);

/// Reusable Strang stepper with cached multipliers and buffers. Not shareable between threads.
class SplitStepper {
public:
    SplitStepper(const Grid& g, double alpha, double lambda, const Field& drift);

    /// One step of length h with nonlinear coefficient c (0 disables the rotation).
    void advance(Field& u, double h, double coefficient);

private:
    void linear_step(Field& u, double h);

    const Grid& grid_;
    double alpha_;
    double lambda_;
    bool has_drift_;
    Field drift_hat_;
    Field work_;
    double cached_h_ = -1.0;
    Field cached_propagator_;
    Field cached_drift_;
};

/// One Strang step with drift μ.
Field step(const Field& u, double dt, const SolverConfig& cfg, const Field& mu, const Grid& g);

struct TimeNode {
    double time;
    std::vector<std::size_t> events;  // indices into JumpPath::events landing at this node
};

/// Uniform steps of dt on [0,T] (last one possibly shorter) with every event time inserted.
std::vector<TimeNode> build_time_grid(double T, double dt, const JumpPath& path);

struct JumpRecord {
    std::size_t pre_sample;  // post value is at pre_sample + 1
    std::vector<std::size_t> events;
};

enum class Storage { NormsOnly, Full };

struct Trajectory {
    double horizon = 0.0;
    std::vector<double> times;
    std::vector<Field> fields;  // empty under Storage::NormsOnly
    NormSeries norms;
    std::vector<JumpRecord> jumps;

    std::size_t size() const { return times.size(); }
};

class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(double time);
    double time() const { return time_; }

private:
    double time_;
};

/// Solves along a fixed jump path up to cfg.T. Throws NonFiniteError on blow-up.
Trajectory solve_path(const Field& x, const JumpPath& path, const NoiseModel& model,
                      const SolverConfig& cfg, Storage storage = Storage::Full);

/// ‖a − b‖_{Y_T} over matching sample times; both trajectories need stored fields.
double y_distance(const Trajectory& a, const Trajectory& b, const Grid& g, double p, double r);

}  // namespace levynls
