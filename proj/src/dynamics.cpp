#include "levynls/dynamics.hpp"
#include "levynls/detail/math.hpp"

#include <cmath>
#include <sstream>

namespace levynls {

double theta(double x)
{
    if (x < 0.0 || std::isnan(x)) throw std::domain_error("theta: argument must be nonnegative");
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    const double s = x - 1.0;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

double theta_R(double x, double R)
{
    if (std::isinf(R)) {
        if (x < 0.0) throw std::domain_error("theta_R: argument must be nonnegative");
        return 1.0;
    }
    return theta(x / R);
}

void SolverConfig::validate(int d) const
{
    const double upper = 1.0 + 4.0 / d;
    if (!(alpha > 1.0 && alpha < upper)) {
        std::ostringstream msg;
        msg << "alpha must lie in (1, " << upper << "), got " << alpha;
        throw std::invalid_argument(msg.str());
    }
    if (lambda != 1.0 && lambda != -1.0) throw std::invalid_argument("lambda must be +1 or -1");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (!(truncation_R >= 1.0)) throw std::invalid_argument("truncation R must be >= 1");
    const auto pr = pair(d);
    if (!check_admissible(pr.p, pr.r, d)) throw std::invalid_argument("(p, alpha+1) is not admissible");
}

void nonlinear_phase_step(std::span<cplx> u, double dt, double lambda, double alpha, double coefficient)
{
    const double scale = -lambda * coefficient * dt;
    if (scale == 0.0) return;
    const double e = 0.5 * (alpha - 1.0);
    for (auto& v : u) {
        const double phase = scale * detail::pow_sq(std::norm(v), e);
        v *= cplx(std::cos(phase), std::sin(phase));
    }
}

Field nonlinear_phase_step(const Field& u, double dt, double lambda, double alpha)
{
    Field out = u;
    nonlinear_phase_step(out, dt, lambda, alpha, 1.0);
    return out;
}

SplitStepper::SplitStepper(const Grid& g, double alpha, double lambda, const Field& drift)
    : grid_(g), alpha_(alpha), lambda_(lambda), has_drift_(false), drift_hat_(g.size()), work_(g.size())
{
    if (!drift.empty()) {
        g.forward(drift, drift_hat_);
        for (const auto& v : drift_hat_) has_drift_ = has_drift_ || v != cplx{};
    }
}

void SplitStepper::linear_step(Field& u, double h)
{
    if (h != cached_h_) {
        cached_h_ = h;
        cached_propagator_.assign(grid_.size(), cplx{1.0, 0.0});
        apply_free_multiplier(cached_propagator_, h, grid_);
        cached_drift_.resize(grid_.size());
        drift_integral_spectrum(drift_hat_, h, grid_, cached_drift_);
    }
    grid_.forward(u, work_);
    if (has_drift_) {
        for (std::size_t j = 0; j < work_.size(); ++j) work_[j] = cached_propagator_[j] * work_[j] - cached_drift_[j];
    } else {
        for (std::size_t j = 0; j < work_.size(); ++j) work_[j] *= cached_propagator_[j];
    }
    grid_.inverse(work_, u);
}

void SplitStepper::advance(Field& u, double h, double coefficient)
{
    nonlinear_phase_step(u, 0.5 * h, lambda_, alpha_, coefficient);
    linear_step(u, h);
    nonlinear_phase_step(u, 0.5 * h, lambda_, alpha_, coefficient);
}

Field step(const Field& u, double dt, const SolverConfig& cfg, const Field& mu, const Grid& g)
{
    SplitStepper stepper(g, cfg.alpha, cfg.lambda, mu);
    Field out = u;
    stepper.advance(out, dt, cfg.nonlinear ? 1.0 : 0.0);
    return out;
}

std::vector<TimeNode> build_time_grid(double T, double dt, const JumpPath& path)
{
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("build_time_grid: T and dt must be positive");
    if (path.horizon < T && !path.events.empty()) throw std::invalid_argument("build_time_grid: jump path horizon shorter than T");

    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double snap = 1e-12 * T;
    const auto& events = path.events;
    std::vector<TimeNode> nodes;
    nodes.reserve(steps + events.size() + 1);

    std::size_t e = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = k == steps ? T : std::min(static_cast<double>(k) * dt, T);
        for (; e < events.size() && events[e].time < t - snap; ++e) {
            if (!nodes.empty() && events[e].time <= nodes.back().time + snap) nodes.back().events.push_back(e);
            else nodes.push_back({events[e].time, {e}});
        }
        // An event within snap of a grid time is moved onto the grid time.
        if (!nodes.empty() && nodes.back().time >= t - snap) nodes.back().time = t;
        else nodes.push_back({t, {}});
        for (; k > 0 && e < events.size() && events[e].time <= t + snap && events[e].time <= T; ++e)
            nodes.back().events.push_back(e);
    }
    return nodes;
}

NonFiniteError::NonFiniteError(double time)
    : std::runtime_error("non-finite state (blow-up) at t = " + std::to_string(time)), time_(time) {}

Trajectory solve_path(const Field& x, const JumpPath& path, const NoiseModel& model,
                      const SolverConfig& cfg, Storage storage)
{
    const auto& g = model.grid;
    cfg.validate(g.dim());
    if (x.size() != g.size()) throw std::invalid_argument("solve_path: initial field does not match the grid");
    if (!all_finite(x)) throw NonFiniteError(0.0);

    const auto comp = compensator_of(model);
    const auto pr = cfg.pair(g.dim());
    const auto nodes = build_time_grid(cfg.T, cfg.dt, path);

    Trajectory traj;
    traj.horizon = cfg.T;
    traj.norms.r = pr.r;
    YNormAccumulator ynorm(pr.p);

    auto record = [&](double t, const Field& u) {
        const double l2 = l2_norm(u, g);
        const double lr = lr_norm(u, pr.r, g);
        traj.times.push_back(t);
        traj.norms.push(t, l2, lr);
        ynorm.add(t, l2, lr);
        if (storage == Storage::Full) traj.fields.push_back(u);
    };

    SplitStepper stepper(g, cfg.alpha, cfg.lambda, comp.mean_field);
    Field u = x;
    record(0.0, u);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double h = nodes[k + 1].time - nodes[k].time;
        const double c = cfg.nonlinear ? theta_R(ynorm.value(), cfg.truncation_R) : 0.0;
        stepper.advance(u, h, c);
        if (!all_finite(u)) throw NonFiniteError(nodes[k + 1].time);

        const auto& node = nodes[k + 1];
        if (node.events.empty()) {
            record(node.time, u);
            continue;
        }
        traj.jumps.push_back({traj.times.size(), node.events});
        record(node.time, u);
        for (auto e : node.events) {
            const auto& z = model.atoms[path.events[e].atom].mark;
            for (std::size_t j = 0; j < u.size(); ++j) u[j] += z[j];
        }
        record(node.time, u);
    }
    return traj;
}

double y_distance(const Trajectory& a, const Trajectory& b, const Grid& g, double p, double r)
{
    if (a.times != b.times) throw std::invalid_argument("y_distance: sample times differ");
    if (a.fields.size() != a.size() || b.fields.size() != b.size())
        throw std::invalid_argument("y_distance: both trajectories need stored fields");
    NormSeries diff;
    diff.r = r;
    Field d(g.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.fields[i][j] - b.fields[i][j];
        diff.push(a.times[i], l2_norm(d, g), lr_norm(d, r, g));
    }
    return y_norm(diff, diff.times.back(), p);
}

}  // namespace levynls
