#include "levynls/harness.hpp"
#include "levynls/detail/math.hpp"
#include "levynls/detail/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace levynls {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ── Configuration ────────────────────────────────────────────────────────────

namespace {

std::vector<double> number_or_array(const ordered_json& j)
{
    if (j.is_number()) return {j.get<double>()};
    return j.get<std::vector<double>>();
}

FieldSpec parse_field_spec(const ordered_json& j)
{
    FieldSpec s;
    s.type = j.value("type", std::string("gaussian_bump"));
    s.amplitude = j.value("amplitude", 1.0);
    s.width = j.value("width", 1.0);
    if (j.contains("center")) s.center = number_or_array(j.at("center"));
    if (j.contains("mode")) {
        for (double m : number_or_array(j.at("mode"))) s.mode.push_back(static_cast<int>(std::lround(m)));
    }
    s.path = j.value("path", std::string());
    if (j.contains("normalize_to") && !j.at("normalize_to").is_null()) s.normalize_to = j.at("normalize_to").get<double>();
    return s;
}

double component(const std::vector<double>& v, int axis)
{
    if (v.empty()) return 0.0;
    return v.size() == 1 ? v[0] : v.at(static_cast<std::size_t>(axis));
}

}  // namespace

void ExperimentConfig::validate() const
{
    try {
        (void)Grid(d, n, box_length);
        solver.validate(d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (n_paths < 1) throw ConfigError("ensemble.n_paths must be >= 1");
    if (R_list.empty()) throw ConfigError("ensemble.R_list must be nonempty");
    for (std::size_t i = 0; i < R_list.size(); ++i) {
        if (!(R_list[i] >= 1.0)) throw ConfigError("ensemble.R_list entries must be >= 1");
        if (i > 0 && !(R_list[i] > R_list[i - 1])) throw ConfigError("ensemble.R_list must be strictly ascending");
    }
    for (double q : q_list)
        if (!(q >= 2.0)) throw ConfigError("ensemble.q_list entries must be >= 2");
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir)
{
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    try {
        const auto j = ordered_json::parse(json_text);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            cfg.d = g.value("d", cfg.d);
            cfg.n = g.value("n", cfg.n);
            cfg.box_length = g.value("box_length", cfg.box_length);
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            cfg.solver.alpha = s.value("alpha", cfg.solver.alpha);
            cfg.solver.lambda = s.value("lambda", cfg.solver.lambda);
            cfg.solver.dt = s.value("dt", cfg.solver.dt);
            cfg.solver.T = s.value("T", cfg.solver.T);
            if (s.contains("R") && !s.at("R").is_null()) cfg.solver.truncation_R = s.at("R").get<double>();
            cfg.solver.nonlinear = s.value("nonlinear", true);
        }
        if (j.contains("initial")) cfg.initial = parse_field_spec(j.at("initial"));
        if (j.contains("noise")) {
            for (const auto& a : j.at("noise").at("atoms")) {
                AtomSpec atom;
                atom.rate = a.at("rate").get<double>();
                atom.mark = parse_field_spec(a.at("mark"));
                cfg.atoms.push_back(std::move(atom));
            }
        }
        if (j.contains("ensemble")) {
            const auto& e = j.at("ensemble");
            cfg.n_paths = e.value("n_paths", cfg.n_paths);
            if (e.contains("R_list")) cfg.R_list = e.at("R_list").get<std::vector<double>>();
            if (e.contains("q_list")) cfg.q_list = e.at("q_list").get<std::vector<double>>();
            cfg.seed = e.value("seed", cfg.seed);
            cfg.workers = e.value("workers", cfg.workers);
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(buf.str(), dir.empty() ? "." : dir);
}

Grid build_grid(const ExperimentConfig& cfg) { return Grid(cfg.d, cfg.n, cfg.box_length); }

Field build_field(const FieldSpec& spec, const Grid& g, const std::string& base_dir)
{
    Field f = g.zeros();
    const std::size_t n = g.n();
    const int d = g.dim();
    auto for_each_node = [&](auto&& fn) {
        if (d == 1) {
            for (std::size_t a = 0; a < n; ++a) f[a] = fn(std::array<double, 2>{g.coordinate(a), 0.0});
        } else {
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) f[a * n + b] = fn(std::array<double, 2>{g.coordinate(a), g.coordinate(b)});
        }
    };
    auto radius2 = [&](const std::array<double, 2>& x) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dx = x[static_cast<std::size_t>(i)] - component(spec.center, i);
            r2 += dx * dx;
        }
        return r2;
    };

    if (spec.type == "gaussian_bump") {
        if (!(spec.width > 0.0)) throw ConfigError("gaussian_bump width must be positive");
        for_each_node([&](const auto& x) { return cplx(spec.amplitude * std::exp(-radius2(x) / (2.0 * spec.width * spec.width)), 0.0); });
    } else if (spec.type == "sech") {
        if (!(spec.width > 0.0)) throw ConfigError("sech width must be positive");
        for_each_node([&](const auto& x) { return cplx(spec.amplitude / std::cosh(std::sqrt(radius2(x)) / spec.width), 0.0); });
    } else if (spec.type == "plane_wave") {
        const double base = 2.0 * std::numbers::pi / g.box_length();
        for_each_node([&](const auto& x) {
            double phase = 0.0;
            for (int i = 0; i < d; ++i) {
                const int m = spec.mode.empty() ? 0 : (spec.mode.size() == 1 ? spec.mode[0] : spec.mode.at(static_cast<std::size_t>(i)));
                phase += base * m * x[static_cast<std::size_t>(i)];
            }
            return spec.amplitude * cplx(std::cos(phase), std::sin(phase));
        });
    } else if (spec.type == "file") {
        const auto full = (std::filesystem::path(base_dir) / spec.path).string();
        auto snap = read_snapshot(full);
        if (snap.dim != g.dim() || snap.n != g.n() || std::abs(snap.box_length - g.box_length()) > 1e-12 * g.box_length())
            throw ConfigError("snapshot grid does not match the configured grid: " + full);
        f = std::move(snap.values);
    } else {
        throw ConfigError("unknown field spec type: " + spec.type);
    }

    if (spec.normalize_to) {
        const double target = *spec.normalize_to;
        const double norm = l2_norm(f, g);
        if (!(target > 0.0)) throw ConfigError("normalize_to must be positive");
        if (norm == 0.0) throw ConfigError("cannot normalize a zero field");
        for (auto& v : f) v *= target / norm;
    }
    return f;
}

NoiseModel build_noise_model(const ExperimentConfig& cfg, const Grid& g)
{
    NoiseModel m{g, {}};
    for (const auto& a : cfg.atoms) m.atoms.push_back({a.rate, build_field(a.mark, g, cfg.base_dir)});
    require_valid(m);
    return m;
}

Field random_bump(const Grid& g, Engine& eng)
{
    const double L = g.box_length();
    const double base = 2.0 * std::numbers::pi / L;
    std::array<double, 2> center{};
    std::array<double, 2> carrier{};
    for (int i = 0; i < g.dim(); ++i) {
        center[static_cast<std::size_t>(i)] = L * (0.5 * uniform01(eng) - 0.25);
        carrier[static_cast<std::size_t>(i)] = base * std::floor(21.0 * uniform01(eng) - 10.0);
    }
    const double width = 0.5 + 2.5 * uniform01(eng);
    const double phase0 = 2.0 * std::numbers::pi * uniform01(eng);
    const double target = 0.5 + 1.5 * uniform01(eng);
    const std::size_t n = g.n();
    Field f = g.zeros();
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
        const std::array<std::size_t, 2> j = g.dim() == 1 ? std::array<std::size_t, 2>{idx, 0}
                                                           : std::array<std::size_t, 2>{idx / n, idx % n};
        double r2 = 0.0;
        double phase = phase0;
        for (int i = 0; i < g.dim(); ++i) {
            const auto a = static_cast<std::size_t>(i);
            const double x = g.coordinate(j[a]);
            r2 += (x - center[a]) * (x - center[a]);
            phase += carrier[a] * x;
        }
        f[idx] = std::exp(-r2 / (2.0 * width * width)) * cplx(std::cos(phase), std::sin(phase));
    }
    const double norm = l2_norm(f, g);
    for (auto& v : f) v *= target / norm;
    return f;
}

// ── Estimators ───────────────────────────────────────────────────────────────

MomentStat moment_estimate(std::span<const double> sup_norms, double q)
{
    if (sup_norms.size() < 2) throw std::invalid_argument("moment_estimate: need at least two samples");
    std::vector<double> powered(sup_norms.size());
    for (std::size_t i = 0; i < powered.size(); ++i) powered[i] = std::pow(sup_norms[i], q);
    const auto est = estimate_mean(powered);
    return {q, est.mean, est.std_error};
}

CoverageFit fit_coverage_trend(std::span<const double> R, std::span<const double> coverage)
{
    if (R.size() < 3 || R.size() != coverage.size()) throw std::invalid_argument("fit_coverage_trend: need >= 3 matching levels");
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
        const double x = 1.0 / R[i];
        sxy += x * (1.0 - coverage[i]);
        sxx += x * x;
    }
    CoverageFit fit;
    fit.C_fit = std::max(0.0, sxy / sxx);
    for (std::size_t i = 0; i < R.size(); ++i) fit.residuals.push_back((1.0 - coverage[i]) - fit.C_fit / R[i]);
    return fit;
}

// ── Ensemble ─────────────────────────────────────────────────────────────────

namespace {

struct LevelOutcome {
    bool blowup = false;
    bool covered = false;
    double sup_l2 = 0.0;
    double lp_lr = 0.0;
    double tau = 0.0;
};

}  // namespace

EnsembleRun run_ensemble(const ExperimentConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    const Grid g = build_grid(cfg);
    const NoiseModel model = build_noise_model(cfg, g);
    const Field x = build_field(cfg.initial, g, cfg.base_dir);
    const auto pr = cfg.solver.pair(g.dim());
    const double T = cfg.solver.T;
    const std::size_t levels = cfg.R_list.size();

    EnsembleRun run;
    run.paths.resize(cfg.n_paths);
    std::vector<std::vector<LevelOutcome>> outcomes(cfg.n_paths, std::vector<LevelOutcome>(levels));

    detail::parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
        auto path = sample_jump_path(model, T, cfg.seed, i);
        for (std::size_t l = 0; l < levels; ++l) {
            SolverConfig s = cfg.solver;
            s.truncation_R = cfg.R_list[l];
            auto& out = outcomes[i][l];
            // A path that never exceeded a smaller level was never truncated.
            if (l > 0 && outcomes[i][l - 1].covered) {
                out = outcomes[i][l - 1];
                continue;
            }
            try {
                const auto traj = solve_path(x, path, model, s, Storage::NormsOnly);
                const auto& ns = traj.norms;
                out.sup_l2 = *std::max_element(ns.l2_values.begin(), ns.l2_values.end());
                out.lp_lr = lp_time_norm(ns.times, ns.lr_values, 0.0, T, pr.p);
                out.tau = tau_R(traj, s.truncation_R, pr.p);
                out.covered = y_norm(ns, ns.times.back(), pr.p) <= s.truncation_R;
            } catch (const NonFiniteError& e) {
                out.blowup = true;
                out.tau = e.time();
            }
        }
        run.paths[i] = {i, std::move(path)};
    });

    auto& rep = run.report;
    rep.n_paths = cfg.n_paths;
    rep.seed = cfg.seed;
    rep.T = T;
    rep.pair = pr;
    for (const auto& p : run.paths) rep.total_events += p.path.events.size();

    std::vector<double> coverage;
    for (std::size_t l = 0; l < levels; ++l) {
        LevelReport level;
        level.R = cfg.R_list[l];
        std::vector<double> sups;
        std::vector<double> lps;
        std::vector<double> taus;
        for (std::size_t i = 0; i < cfg.n_paths; ++i) {
            const auto& o = outcomes[i][l];
            taus.push_back(o.tau);
            if (o.blowup) {
                ++level.blowups;
                continue;
            }
            if (o.covered) ++level.covered;
            sups.push_back(o.sup_l2);
            lps.push_back(o.lp_lr);
        }
        level.coverage = static_cast<double>(level.covered) / static_cast<double>(cfg.n_paths);
        for (double q : cfg.q_list) {
            if (sups.size() >= 2) {
                level.moments.push_back(moment_estimate(sups, q));
            } else {
                const double v = sups.empty() ? std::nan("") : std::pow(sups[0], q);
                level.moments.push_back({q, v, 0.0});
            }
        }
        const auto lp_est = estimate_mean(lps);
        level.mean_lp_lr = lp_est.mean;
        level.mean_lp_lr_std_error = lp_est.std_error;
        level.mean_tau = estimate_mean(taus).mean;
        coverage.push_back(level.coverage);
        rep.miss_times_R.push_back((1.0 - level.coverage) * level.R);
        rep.levels.push_back(std::move(level));
    }
    for (std::size_t l = 1; l < levels; ++l) rep.coverage_monotone = rep.coverage_monotone && coverage[l] >= coverage[l - 1];
    if (levels >= 3) rep.fit = fit_coverage_trend(cfg.R_list, coverage);

    SolverConfig s = cfg.solver;
    s.truncation_R = cfg.R_list.back();
    try {
        run.sample_trajectory = solve_path(x, run.paths.front().path, model, s, Storage::NormsOnly);
    } catch (const NonFiniteError&) {
        run.sample_trajectory = {};
    }
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

// ── Serialization ────────────────────────────────────────────────────────────

namespace {

void dump(const ordered_json& j, std::string& out, int depth)
{
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(2 * depth), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += pad + ordered_json(it.key()).dump() + ": ";
            dump(it.value(), out, depth + 1);
        }
        out += "\n" + close + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i > 0) out += ",\n";
            out += pad;
            dump(j[i], out, depth + 1);
        }
        out += "\n" + close + "]";
    } else if (j.is_number_float()) {
        const double v = j.get<double>();
        out += std::isfinite(v) ? format_double(v) : "null";
    } else {
        out += j.dump();
    }
}

std::string render(const ordered_json& j)
{
    std::string out;
    dump(j, out, 0);
    out += "\n";
    return out;
}

ordered_json doubles(const std::vector<double>& v)
{
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(x);
    return a;
}

}  // namespace

std::string to_json(const EnsembleReport& rep)
{
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "ensemble";
    j["n_paths"] = rep.n_paths;
    j["seed"] = rep.seed;
    j["T"] = rep.T;
    j["p"] = rep.pair.p;
    j["r"] = rep.pair.r;
    j["total_events"] = rep.total_events;
    ordered_json levels = ordered_json::array();
    for (const auto& l : rep.levels) {
        ordered_json lj;
        lj["R"] = l.R;
        lj["coverage"] = l.coverage;
        lj["covered"] = l.covered;
        lj["blowups"] = l.blowups;
        ordered_json moments = ordered_json::array();
        for (const auto& m : l.moments) moments.push_back({{"q", m.q}, {"mean", m.mean}, {"std_error", m.std_error}});
        lj["sup_l2_moments"] = moments;
        lj["mean_lp_lr"] = l.mean_lp_lr;
        lj["mean_lp_lr_std_error"] = l.mean_lp_lr_std_error;
        lj["mean_tau"] = l.mean_tau;
        levels.push_back(lj);
    }
    j["levels"] = levels;
    j["coverage_monotone"] = rep.coverage_monotone;
    j["miss_times_R"] = doubles(rep.miss_times_R);
    j["coverage_fit"] = {{"C_fit", rep.fit.C_fit}, {"residuals", doubles(rep.fit.residuals)}};
    return render(j);
}

std::string to_json(const StrichartzReport& rep, const std::string& kind)
{
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = kind;
    j["p"] = rep.pair.p;
    j["r"] = rep.pair.r;
    if (kind == "strichartz_inhom") {
        j["gamma"] = rep.source_pair.p;
        j["rho"] = rep.source_pair.r;
    }
    if (kind == "strichartz_stoch") j["q"] = rep.q;
    j["sample_count"] = rep.sample_count;
    j["ratio_max"] = rep.ratio_max;
    j["ratio_mean"] = rep.ratio_mean;
    j["ratio_std_error"] = rep.ratio_stderr;
    if (kind == "strichartz_inhom") {
        j["energy_ratio_max"] = rep.energy_ratio_max;
        j["energy_ratio_mean"] = rep.energy_ratio_mean;
    }
    if (kind == "strichartz_stoch") {
        j["lhs_mean"] = rep.lhs_mean;
        j["lhs_std_error"] = rep.lhs_stderr;
        j["rhs"] = rep.rhs;
    }
    j["resolution"] = {{"d", rep.d}, {"n", rep.n}, {"box_length", rep.box_length},
                       {"time_steps", rep.time_steps}, {"T", rep.horizon}};
    return render(j);
}

std::string to_json(const MassBalanceReport& rep)
{
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "mass_balance";
    j["q"] = rep.q;
    j["max_abs_residual"] = rep.max_abs_residual;
    j["max_jump_mismatch"] = rep.max_jump_mismatch;
    j["samples"] = rep.times.size();
    return render(j);
}

std::string to_json(const StoppingReport& rep)
{
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "stopping_times";
    j["tau_R"] = rep.tau_R;
    j["sigma"] = doubles(rep.sigma);
    j["M_R"] = rep.M_R;
    j["T_R_lower_bound"] = rep.T_R_lower_bound;
    j["n_intervals"] = rep.n_intervals;
    return render(j);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_series_csv(const std::string& path, const Trajectory& traj, double p)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "time,l2,lr,y_norm\n";
    YNormAccumulator acc(p);
    const auto& ns = traj.norms;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        acc.add(ns.times[i], ns.l2_values[i], ns.lr_values[i]);
        out << format_double(ns.times[i]) << ',' << format_double(ns.l2_values[i]) << ','
            << format_double(ns.lr_values[i]) << ',' << format_double(acc.value()) << '\n';
    }
}

void write_events_csv(const std::string& path, const std::vector<PathRecord>& paths)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "path,time,atom\n";
    for (const auto& rec : paths)
        for (const auto& e : rec.path.events) out << rec.index << ',' << format_double(e.time) << ',' << e.atom << '\n';
}

}  // namespace levynls
