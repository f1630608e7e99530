/*
 * harness.hpp — Monte Carlo ensembles, estimators, configuration and output
 *
 * Every path i draws its noise from the stream (master seed, i), so a report
 * depends only on the configuration, never on the worker count. Reductions
 * use pairwise sums in path order and floats are written with 17
 * significant digits.
 */

#pragma once

#include "levynls/analysis.hpp"
#include "levynls/dynamics.hpp"
#include "levynls/noise.hpp"
#include "levynls/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace levynls {

inline constexpr int kReportSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One of gaussian_bump{amplitude, width, center}, plane_wave{amplitude, mode},
/// sech{amplitude, width, center} or file{path}, optionally rescaled to an L² norm.
struct FieldSpec {
    std::string type = "gaussian_bump";
    double amplitude = 1.0;
    double width = 1.0;
    std::vector<double> center;  // per dimension; empty means the origin
    std::vector<int> mode;       // per dimension
    std::string path;
    std::optional<double> normalize_to;
};

struct AtomSpec {
    double rate = 1.0;
    FieldSpec mark;
};

struct ExperimentConfig {
    int d = 1;
    std::size_t n = 1024;
    double box_length = 20.0 * 3.14159265358979323846;
    SolverConfig solver;
    FieldSpec initial;
    std::vector<AtomSpec> atoms;
    std::size_t n_paths = 1;
    std::vector<double> R_list{2.0, 4.0, 8.0, 16.0};
    std::vector<double> q_list{2.0};
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = hardware concurrency
    std::string output_dir = "out";
    std::string base_dir = ".";  // resolves relative file{path} specs

    /// Throws ConfigError describing the first violation.
    void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

Grid build_grid(const ExperimentConfig& cfg);
Field build_field(const FieldSpec& spec, const Grid& g, const std::string& base_dir = ".");
NoiseModel build_noise_model(const ExperimentConfig& cfg, const Grid& g);

/// Localized random test field: a Gaussian bump with random center, width,
/// carrier wavenumber and phase, scaled to a random L² norm in [0.5, 2].
Field random_bump(const Grid& g, Engine& eng);

struct MomentStat {
    double q = 2.0;
    double mean = 0.0;
    double std_error = 0.0;
};

/// mean of s^q with its standard error (population deviation / √n). Needs ≥ 2 samples.
MomentStat moment_estimate(std::span<const double> sup_norms, double q);

struct LevelReport {
    double R = 0.0;
    std::size_t covered = 0;      // paths with τ_R = T
    double coverage = 0.0;
    std::size_t blowups = 0;
    std::vector<MomentStat> moments;  // E sup_t ‖Z^R(t)‖^q per q
    double mean_lp_lr = 0.0;          // E ‖Z^R‖_{L^p(0,T;L^r)}
    double mean_lp_lr_std_error = 0.0;
    double mean_tau = 0.0;
};

struct CoverageFit {
    double C_fit = 0.0;
    std::vector<double> residuals;  // (1 − coverage_i) − C_fit/R_i
};

/// Least squares of (1 − coverage) against 1/R through the origin. Needs ≥ 3 levels.
CoverageFit fit_coverage_trend(std::span<const double> R, std::span<const double> coverage);

struct EnsembleReport {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double T = 0.0;
    AdmissiblePair pair{};
    std::vector<LevelReport> levels;
    bool coverage_monotone = true;
    std::vector<double> miss_times_R;  // (1 − coverage)·R per level
    CoverageFit fit;
    std::size_t total_events = 0;
    double runtime_seconds = 0.0;  // not serialized
};

struct PathRecord {
    std::uint64_t index = 0;
    JumpPath path;
};

struct EnsembleRun {
    EnsembleReport report;
    std::vector<PathRecord> paths;
    Trajectory sample_trajectory;  // path 0 at the largest R
};

EnsembleRun run_ensemble(const ExperimentConfig& cfg);

/// Deterministic JSON text of the report (schema_version, 17 significant digits).
std::string to_json(const EnsembleReport& rep);
std::string to_json(const StrichartzReport& rep, const std::string& kind);
std::string to_json(const MassBalanceReport& rep);
std::string to_json(const StoppingReport& rep);

void write_series_csv(const std::string& path, const Trajectory& traj, double p);
void write_events_csv(const std::string& path, const std::vector<PathRecord>& paths);
void write_text(const std::string& path, const std::string& text);

/// printf("%.17g") for CSV cells.
std::string format_double(double v);

}  // namespace levynls
