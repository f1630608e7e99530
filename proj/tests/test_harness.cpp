#include "support.hpp"

#include "levynls/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace levynls;

TEST_CASE("moment estimator")
{
    const std::vector<double> equal(6, 1.3);
    const auto e = moment_estimate(equal, 3.0);
    CHECK(e.mean == doctest::Approx(std::pow(1.3, 3.0)).epsilon(1e-14));
    CHECK(e.std_error == doctest::Approx(0.0).epsilon(1e-14));

    const std::vector<double> two{1.0, 3.0};
    const auto t = moment_estimate(two, 2.0);
    CHECK(t.mean == 5.0);
    CHECK(t.std_error == doctest::Approx(4.0 / std::sqrt(2.0)).epsilon(1e-15));

    CHECK_THROWS(moment_estimate(std::vector<double>{1.0}, 2.0));

    // exp(σZ) has E[s^q] = exp(q²σ²/2).
    Engine eng = make_stream(31, 0);
    const double sigma = 0.5;
    std::vector<double> s(10000);
    for (auto& v : s) v = std::exp(sigma * standard_normal(eng));
    for (double q : {2.0, 4.0}) {
        const auto est = moment_estimate(s, q);
        CHECK(std::abs(est.mean - std::exp(0.5 * q * q * sigma * sigma)) < 3.0 * est.std_error);
    }
}

TEST_CASE("coverage trend fit")
{
    const std::vector<double> R{2.0, 4.0, 8.0, 16.0};
    const auto full = fit_coverage_trend(R, std::vector<double>(4, 1.0));
    CHECK(full.C_fit == 0.0);

    std::vector<double> cov;
    for (double r : R) cov.push_back(1.0 - 2.0 / r);
    const auto fit = fit_coverage_trend(R, cov);
    CHECK(fit.C_fit == doctest::Approx(2.0).epsilon(1e-14));
    for (double res : fit.residuals) CHECK(std::abs(res) < 1e-14);

    CHECK_THROWS(fit_coverage_trend(std::vector<double>{2.0, 4.0}, std::vector<double>{1.0, 1.0}));
}

TEST_CASE("configuration parsing and validation")
{
    const std::string text = R"({
      "grid": {"d": 1, "n": 128, "box_length": 30.0},
      "solver": {"alpha": 2.5, "lambda": -1, "dt": 0.002, "T": 0.5, "R": 12},
      "initial": {"type": "sech", "amplitude": 1.2, "width": 1.5},
      "noise": {"atoms": [{"rate": 2.0, "mark": {"type": "gaussian_bump", "width": 0.5, "center": 3, "normalize_to": 0.4}}]},
      "ensemble": {"n_paths": 7, "R_list": [3, 6, 9], "q_list": [2, 3], "seed": 123, "workers": 2},
      "output_dir": "results"
    })";
    const auto cfg = parse_config(text);
    CHECK(cfg.n == 128);
    CHECK(cfg.box_length == 30.0);
    CHECK(cfg.solver.alpha == 2.5);
    CHECK(cfg.solver.lambda == -1.0);
    CHECK(cfg.solver.truncation_R == 12.0);
    CHECK(cfg.initial.type == "sech");
    CHECK(cfg.atoms.size() == 1);
    CHECK(cfg.n_paths == 7);
    CHECK(cfg.R_list == std::vector<double>{3, 6, 9});
    CHECK(cfg.seed == 123);
    CHECK(cfg.workers == 2);
    CHECK(cfg.output_dir == "results");
    CHECK_NOTHROW(cfg.validate());

    const Grid g = build_grid(cfg);
    const auto model = build_noise_model(cfg, g);
    CHECK(l2_norm(model.atoms[0].mark, g) == doctest::Approx(0.4).epsilon(1e-14));
    const Field x = build_field(cfg.initial, g);
    CHECK(std::abs(x[g.n() / 2] - cplx(1.2, 0.0)) < 1e-15);

    auto bad = cfg;
    bad.n_paths = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.R_list = {4, 2};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.n = 100;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.solver.alpha = 6.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": "many"}})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

    FieldSpec unknown;
    unknown.type = "triangle";
    CHECK_THROWS_AS(build_field(unknown, g), ConfigError);

    auto big = cfg;
    big.atoms[0].mark.normalize_to = 1.5;
    CHECK_THROWS_AS(build_noise_model(big, g), NoiseModelError);
}

TEST_CASE("field builders")
{
    const Grid g(1, 64, 2.0 * std::numbers::pi);
    FieldSpec wave;
    wave.type = "plane_wave";
    wave.amplitude = 0.5;
    wave.mode = {2};
    const Field w = build_field(wave, g);
    for (std::size_t j = 0; j < g.n(); ++j) CHECK(std::abs(w[j] - 0.5 * std::polar(1.0, 2.0 * g.coordinate(j))) < 1e-14);

    const auto path = (std::filesystem::temp_directory_path() / "levynls_field_spec.txt").string();
    write_snapshot(path, w, g);
    FieldSpec file;
    file.type = "file";
    file.path = std::filesystem::path(path).filename().string();
    const Field r = build_field(file, g, std::filesystem::path(path).parent_path().string());
    CHECK(test::max_abs_diff(r, w) == 0.0);
    CHECK_THROWS_AS(build_field(file, Grid(1, 32, 1.0), std::filesystem::path(path).parent_path().string()), ConfigError);
    std::filesystem::remove(path);

    Engine eng = make_stream(1, 0);
    const Field b = random_bump(Grid(2, 32, 20.0), eng);
    CHECK(all_finite(b));
}

TEST_CASE("ensemble with zero noise on a defocusing run is fully covered")
{
    ExperimentConfig cfg;
    cfg.n = 128;
    cfg.box_length = 40.0;
    cfg.solver.dt = 5e-3;
    cfg.n_paths = 1;
    cfg.R_list = {4.0, 8.0, 16.0};
    const auto run = run_ensemble(cfg);
    for (const auto& l : run.report.levels) {
        CHECK(l.coverage == 1.0);
        CHECK(l.blowups == 0);
        CHECK(l.mean_tau == 1.0);
    }
    CHECK(run.report.coverage_monotone);
    CHECK(run.report.fit.C_fit == 0.0);
}

TEST_CASE("ensemble reports do not depend on the worker count")
{
    ExperimentConfig cfg;
    cfg.n = 64;
    cfg.box_length = 30.0;
    cfg.solver.dt = 1e-2;
    cfg.initial.amplitude = 0.8;
    AtomSpec atom;
    atom.rate = 4.0;
    atom.mark.width = 0.7;
    atom.mark.center = {2.0};
    atom.mark.normalize_to = 0.6;
    cfg.atoms = {atom};
    cfg.n_paths = 24;
    cfg.R_list = {2.0, 3.0, 5.0};
    cfg.q_list = {2.0, 4.0};
    cfg.seed = 5;

    cfg.workers = 1;
    const auto a = to_json(run_ensemble(cfg).report);
    cfg.workers = 4;
    const auto b = to_json(run_ensemble(cfg).report);
    CHECK(a == b);
    CHECK(a.find("\"schema_version\": 1") != std::string::npos);

    const auto rep = run_ensemble(cfg).report;
    CHECK(rep.coverage_monotone);
    for (const auto& l : rep.levels) {
        CHECK(l.coverage >= 0.0);
        CHECK(l.coverage <= 1.0);
        for (const auto& m : l.moments) {
            CHECK(std::isfinite(m.mean));
            CHECK(m.std_error >= 0.0);
        }
    }
}

TEST_CASE("number formatting")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
    CHECK(std::stod(format_double(std::numbers::pi)) == std::numbers::pi);
}
