#include "levynls/picard.hpp"
#include "levynls/detail/math.hpp"

#include <cmath>

namespace levynls {

namespace {

// Per-node coefficient θ_R(‖Z‖_{Y_{t_k}}), with left limits at jump nodes included in the sup.
std::vector<double> truncation_coefficients(const std::vector<Field>& z, const std::vector<TimeNode>& nodes,
                                            const std::vector<Field>& jump_sum, double R, AdmissiblePair pr,
                                            const Grid& g)
{
    std::vector<double> coeff(z.size());
    YNormAccumulator acc(pr.p);
    Field pre(g.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!nodes[k].events.empty()) {
            for (std::size_t j = 0; j < pre.size(); ++j) pre[j] = z[k][j] - jump_sum[k][j];
            acc.add(nodes[k].time, l2_norm(pre, g), lr_norm(pre, pr.r, g));
        }
        acc.add(nodes[k].time, l2_norm(z[k], g), lr_norm(z[k], pr.r, g));
        coeff[k] = theta_R(acc.value(), R);
    }
    return coeff;
}

}  // namespace

std::vector<double> PicardReport::ratios() const
{
    std::vector<double> out;
    for (std::size_t i = 1; i < residuals.size(); ++i) out.push_back(residuals[i] / residuals[i - 1]);
    return out;
}

double default_picard_tolerance(const Field& x, const Grid& g) { return 1e-10 * (1.0 + l2_norm(x, g)); }

PicardReport picard_solve(const Field& x, const JumpPath& path, const NoiseModel& model,
                          const SolverConfig& cfg, double R, std::size_t n_max, double tol)
{
    const auto& g = model.grid;
    SolverConfig c = cfg;
    c.truncation_R = R;
    c.validate(g.dim());
    if (x.size() != g.size()) throw std::invalid_argument("picard_solve: initial field does not match the grid");
    if (n_max == 0) throw std::invalid_argument("picard_solve: n_max must be positive");

    const auto pr = c.pair(g.dim());
    const auto nodes = build_time_grid(c.T, c.dt, path);
    const std::size_t K = nodes.size();
    std::vector<double> times(K);
    for (std::size_t k = 0; k < K; ++k) times[k] = nodes[k].time;

    // Event times snapped onto their nodes, as solve_path sees them.
    JumpPath snapped = path;
    for (const auto& node : nodes)
        for (auto e : node.events) snapped.events[e].time = node.time;

    // Linear part S_t x + M(t) at every node, shared by all iterations.
    std::vector<Field> linear = convolution_spectra(snapped, model, times);
    Field x_hat(g.size());
    g.forward(x, x_hat);
    Field work(g.size());
    for (std::size_t k = 0; k < K; ++k) {
        work = x_hat;
        apply_free_multiplier(work, times[k], g);
        for (std::size_t j = 0; j < work.size(); ++j) linear[k][j] += work[j];
        g.inverse(linear[k], linear[k]);
    }

    std::vector<Field> jump_sum(K);
    for (std::size_t k = 0; k < K; ++k) {
        if (nodes[k].events.empty()) continue;
        jump_sum[k] = g.zeros();
        for (auto e : nodes[k].events) {
            const auto& z = model.atoms[path.events[e].atom].mark;
            for (std::size_t j = 0; j < z.size(); ++j) jump_sum[k][j] += z[j];
        }
    }

    PicardReport report;
    report.tolerance = tol < 0.0 ? default_picard_tolerance(x, g) : tol;

    std::vector<Field> current = linear;
    std::vector<Field> next(K, g.zeros());
    Field duhamel_hat(g.size());
    Field forcing(g.size());
    Field diff(g.size());
    const double e = 0.5 * (c.alpha - 1.0);

    while (report.iterations < n_max) {
        const auto coeff = c.nonlinear ? truncation_coefficients(current, nodes, jump_sum, R, pr, g)
                                       : std::vector<double>(K, 0.0);
        std::fill(duhamel_hat.begin(), duhamel_hat.end(), cplx{});
        next[0] = linear[0];
        for (std::size_t k = 0; k + 1 < K; ++k) {
            const double h = times[k + 1] - times[k];
            if (coeff[k] != 0.0) {
                const cplx factor = cplx(0.0, -c.lambda * coeff[k]) * h;
                for (std::size_t j = 0; j < forcing.size(); ++j) {
                    const cplx v = current[k][j];
                    forcing[j] = factor * detail::pow_sq(std::norm(v), e) * v;
                }
                g.forward(forcing, forcing);
                for (std::size_t j = 0; j < forcing.size(); ++j) duhamel_hat[j] += forcing[j];
            }
            apply_free_multiplier(duhamel_hat, h, g);
            g.inverse(duhamel_hat, next[k + 1]);
            for (std::size_t j = 0; j < forcing.size(); ++j) next[k + 1][j] += linear[k + 1][j];
        }

        NormSeries residual;
        residual.r = pr.r;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = next[k][j] - current[k][j];
            residual.push(times[k], l2_norm(diff, g), lr_norm(diff, pr.r, g));
        }
        std::swap(current, next);
        ++report.iterations;
        const double res = y_norm(residual, times.back(), pr.p);
        report.residuals.push_back(res);
        if (!std::isfinite(res)) break;
        if (res <= report.tolerance) {
            report.converged = true;
            break;
        }
    }

    auto& traj = report.trajectory;
    traj.horizon = c.T;
    traj.norms.r = pr.r;
    auto record = [&](double t, Field u) {
        traj.times.push_back(t);
        traj.norms.push(t, l2_norm(u, g), lr_norm(u, pr.r, g));
        traj.fields.push_back(std::move(u));
    };
    for (std::size_t k = 0; k < K; ++k) {
        if (!nodes[k].events.empty()) {
            traj.jumps.push_back({traj.times.size(), nodes[k].events});
            Field pre = current[k];
            for (std::size_t j = 0; j < pre.size(); ++j) pre[j] -= jump_sum[k][j];
            record(times[k], std::move(pre));
        }
        record(times[k], current[k]);
    }
    return report;
}

}  // namespace levynls
