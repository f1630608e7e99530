#include "levynls/analysis.hpp"
#include "levynls/harness.hpp"
#include "levynls/picard.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using namespace levynls;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool dump_state = false;
};

ExperimentConfig load(const Globals& g)
{
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.config.empty()) cfg.atoms.clear();
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name)
{
    return (fs::path(cfg.output_dir) / name).string();
}

void emit_csv(const ExperimentConfig& cfg, const std::string& name, const std::string& text)
{
    std::cout << text;
    write_text(out_path(cfg, name), text);
}

std::string csv_row(std::initializer_list<double> values)
{
    std::string row;
    for (double v : values) {
        if (!row.empty()) row += ',';
        row += format_double(v);
    }
    return row + '\n';
}

std::string simulate_json(const Trajectory& traj, const JumpPath& path, AdmissiblePair pr, double R)
{
    const auto& ns = traj.norms;
    double sup = 0.0;
    for (double v : ns.l2_values) sup = std::max(sup, v);
    std::ostringstream os;
    os << "{\n"
       << "  \"schema_version\": " << kReportSchemaVersion << ",\n"
       << "  \"kind\": \"simulate\",\n"
       << "  \"seed\": " << path.seed << ",\n"
       << "  \"T\": " << format_double(traj.horizon) << ",\n"
       << "  \"p\": " << format_double(pr.p) << ",\n"
       << "  \"r\": " << format_double(pr.r) << ",\n"
       << "  \"R\": " << (std::isfinite(R) ? format_double(R) : std::string("null")) << ",\n"
       << "  \"samples\": " << ns.size() << ",\n"
       << "  \"events\": " << path.events.size() << ",\n"
       << "  \"initial_l2\": " << format_double(ns.l2_values.front()) << ",\n"
       << "  \"final_l2\": " << format_double(ns.l2_values.back()) << ",\n"
       << "  \"sup_l2\": " << format_double(sup) << ",\n"
       << "  \"y_norm\": " << format_double(y_norm(ns, ns.times.back(), pr.p)) << ",\n"
       << "  \"tau_R\": " << format_double(std::isfinite(R) ? tau_R(traj, R, pr.p) : traj.horizon) << "\n"
       << "}\n";
    return os.str();
}

int cmd_simulate(const Globals& gl)
{
    const auto cfg = load(gl);
    const Grid g = build_grid(cfg);
    const auto model = build_noise_model(cfg, g);
    const Field x = build_field(cfg.initial, g, cfg.base_dir);
    const auto path = sample_jump_path(model, cfg.solver.T, cfg.seed, 0);
    const auto pr = cfg.solver.pair(g.dim());
    const auto traj = solve_path(x, path, model, cfg.solver, gl.dump_state ? Storage::Full : Storage::NormsOnly);
    write_text(out_path(cfg, "report.json"), simulate_json(traj, path, pr, cfg.solver.truncation_R));
    write_series_csv(out_path(cfg, "series.csv"), traj, pr.p);
    write_events_csv(out_path(cfg, "events.csv"), {{0, path}});
    if (gl.dump_state) {
        write_snapshot(out_path(cfg, "state_initial.txt"), traj.fields.front(), g);
        write_snapshot(out_path(cfg, "state_final.txt"), traj.fields.back(), g);
    }
    std::cout << "simulated " << traj.size() << " samples, " << path.events.size() << " jumps -> " << cfg.output_dir << "\n";
    return 0;
}

int cmd_ensemble(const Globals& gl)
{
    const auto cfg = load(gl);
    const auto run = run_ensemble(cfg);
    write_text(out_path(cfg, "report.json"), to_json(run.report));
    write_events_csv(out_path(cfg, "events.csv"), run.paths);
    if (run.sample_trajectory.size() > 0) write_series_csv(out_path(cfg, "series.csv"), run.sample_trajectory, run.report.pair.p);
    write_text(out_path(cfg, "runtime.json"),
               "{\n  \"runtime_seconds\": " + format_double(run.report.runtime_seconds) + "\n}\n");
    std::cout << "R,coverage,blowups,E_sup_l2_q,std_error\n";
    for (const auto& l : run.report.levels)
        for (const auto& m : l.moments)
            std::cout << format_double(l.R) << ',' << format_double(l.coverage) << ',' << l.blowups << ','
                      << format_double(m.mean) << ',' << format_double(m.std_error) << '\n';
    return 0;
}

int cmd_picard(const Globals& gl, double R, std::size_t n_max)
{
    const auto cfg = load(gl);
    const Grid g = build_grid(cfg);
    const auto model = build_noise_model(cfg, g);
    const Field x = build_field(cfg.initial, g, cfg.base_dir);
    const auto path = sample_jump_path(model, cfg.solver.T, cfg.seed, 0);
    const double level = R > 0.0 ? R : cfg.solver.truncation_R;
    const auto rep = picard_solve(x, path, model, cfg.solver, level, n_max);
    const auto ratios = rep.ratios();
    std::string csv = "iteration,residual,ratio\n";
    for (std::size_t i = 0; i < rep.residuals.size(); ++i) {
        csv += std::to_string(i + 1) + ',' + format_double(rep.residuals[i]) + ',';
        csv += (i == 0 ? std::string() : format_double(ratios[i - 1])) + '\n';
    }
    emit_csv(cfg, "picard.csv", csv);
    if (gl.dump_state) write_snapshot(out_path(cfg, "state_final.txt"), rep.trajectory.fields.back(), g);
    std::cerr << (rep.converged ? "converged" : "not converged") << " after " << rep.iterations << " iterations\n";
    return rep.converged ? 0 : 2;
}

int cmd_strichartz(const Globals& gl, const std::string& kind, std::size_t samples, std::size_t steps, double q)
{
    const auto cfg = load(gl);
    const Grid g = build_grid(cfg);
    const auto pr = cfg.solver.pair(g.dim());
    const double T = cfg.solver.T;
    StrichartzReport rep;
    std::string json_kind;
    if (kind == "homog") {
        Engine eng = make_stream(cfg.seed, 0);
        std::vector<Field> phis;
        for (std::size_t i = 0; i < samples; ++i) phis.push_back(random_bump(g, eng));
        rep = strichartz_homog(phis, pr, T, steps, g);
        json_kind = "strichartz_homog";
    } else if (kind == "inhom") {
        Engine eng = make_stream(cfg.seed, 0);
        std::vector<std::vector<Field>> ens;
        for (std::size_t i = 0; i < samples; ++i) {
            const Field phi = random_bump(g, eng);
            const double omega = 2.0 * std::numbers::pi * (1.0 + 4.0 * uniform01(eng)) / T;
            std::vector<Field> f(steps, phi);
            for (std::size_t m = 0; m < steps; ++m)
                for (auto& v : f[m]) v *= std::cos(omega * T * static_cast<double>(m) / static_cast<double>(steps));
            ens.push_back(std::move(f));
        }
        rep = strichartz_inhom(ens, pr, pr, T, g);
        json_kind = "strichartz_inhom";
    } else if (kind == "stoch") {
        const auto model = build_noise_model(cfg, g);
        rep = strichartz_stoch(model, q, pr, T, steps, samples, cfg.seed, cfg.workers);
        json_kind = "strichartz_stoch";
    } else {
        throw ConfigError("unknown strichartz kind: " + kind);
    }
    write_text(out_path(cfg, "report.json"), to_json(rep, json_kind));
    std::string csv = "kind,p,r,samples,time_steps,ratio_max,ratio_mean,ratio_std_error\n";
    csv += kind + ',' + format_double(pr.p) + ',' + format_double(pr.r) + ',' + std::to_string(rep.sample_count) + ',' +
           std::to_string(rep.time_steps) + ',' + csv_row({rep.ratio_max, rep.ratio_mean, rep.ratio_stderr});
    emit_csv(cfg, "strichartz.csv", csv);
    return 0;
}

int cmd_mass_balance(const Globals& gl, double q)
{
    const auto cfg = load(gl);
    const Grid g = build_grid(cfg);
    const auto model = build_noise_model(cfg, g);
    const Field x = build_field(cfg.initial, g, cfg.base_dir);
    const auto path = sample_jump_path(model, cfg.solver.T, cfg.seed, 0);
    const auto traj = solve_path(x, path, model, cfg.solver, Storage::Full);
    const auto rep = mass_balance(traj, path, model, q);
    write_text(out_path(cfg, "report.json"), to_json(rep));
    std::string csv = "time,residual\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) csv += csv_row({rep.times[i], rep.residual_series[i]});
    write_text(out_path(cfg, "mass_balance.csv"), csv);
    std::cout << "q,dt,events,max_abs_residual,max_jump_mismatch\n"
              << csv_row({q, cfg.solver.dt, static_cast<double>(path.events.size()), rep.max_abs_residual,
                          rep.max_jump_mismatch});
    if (gl.dump_state) write_snapshot(out_path(cfg, "state_final.txt"), traj.fields.back(), g);
    return 0;
}

int cmd_roots(const Globals& gl, double K, double alpha)
{
    ExperimentConfig cfg;
    cfg.output_dir = gl.out_dir.empty() ? (gl.config.empty() ? cfg.output_dir : load_config(gl.config).output_dir) : gl.out_dir;
    fs::create_directories(cfg.output_dir);
    const auto [c1, c2] = f_roots(K, alpha);
    std::ostringstream os;
    os << "{\n  \"schema_version\": " << kReportSchemaVersion << ",\n  \"kind\": \"roots\",\n"
       << "  \"K\": " << format_double(K) << ",\n  \"alpha\": " << format_double(alpha) << ",\n"
       << "  \"c1\": " << format_double(c1) << ",\n  \"c2\": " << format_double(c2) << ",\n"
       << "  \"f_c1\": " << format_double(root_function(c1, K, alpha)) << ",\n"
       << "  \"f_c2\": " << format_double(root_function(c2, K, alpha)) << "\n}\n";
    write_text(out_path(cfg, "report.json"), os.str());
    emit_csv(cfg, "roots.csv", "K,alpha,c1,c2\n" + csv_row({K, alpha, c1, c2}));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pseudospectral NLS with compensated jump noise: simulation and verification harness"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals gl;
    app.add_option("--config", gl.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", gl.seed, "Override the master seed");
    app.add_option("--out-dir", gl.out_dir, "Override the output directory");
    app.add_flag("--dump-state", gl.dump_state, "Write initial/final field snapshots");

    auto* sim = app.add_subcommand("simulate", "Solve one path (stream 0) and write series, events and report");
    auto* ens = app.add_subcommand("ensemble", "Monte Carlo ensemble over R_list");

    double picard_R = -1.0;
    std::size_t picard_n = 60;
    auto* pic = app.add_subcommand("picard-check", "Picard iteration residual table for path 0");
    pic->add_option("--R", picard_R, "Truncation level (default: solver.R)");
    pic->add_option("--max-iter", picard_n, "Iteration cap");

    std::string s_kind = "homog";
    std::size_t s_samples = 64;
    std::size_t s_steps = 1000;
    double s_q = 2.0;
    auto* str = app.add_subcommand("strichartz", "Empirical Strichartz constants");
    str->add_option("--kind", s_kind, "homog | inhom | stoch")->check(CLI::IsMember({"homog", "inhom", "stoch"}));
    str->add_option("--samples", s_samples, "Fields (homog/inhom) or noise paths (stoch)");
    str->add_option("--steps", s_steps, "Time steps on [0,T]");
    str->add_option("--q", s_q, "Moment exponent (stoch)");

    double mb_q = 2.0;
    auto* mb = app.add_subcommand("mass-balance", "Pathwise Ito balance of the q-th power of the L2 norm");
    mb->add_option("--q", mb_q, "Exponent q >= 2");

    double r_K = 1.0;
    double r_alpha = 3.0;
    auto* roots = app.add_subcommand("roots", "Positive roots of K + x^a/(4(2K)^(a-1)) - x");
    roots->add_option("--K", r_K, "K > 0");
    roots->add_option("--alpha", r_alpha, "alpha > 1");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(gl);
        if (*ens) return cmd_ensemble(gl);
        if (*pic) return cmd_picard(gl, picard_R, picard_n);
        if (*str) return cmd_strichartz(gl, s_kind, s_samples, s_steps, s_q);
        if (*mb) return cmd_mass_balance(gl, mb_q);
        if (*roots) return cmd_roots(gl, r_K, r_alpha);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
