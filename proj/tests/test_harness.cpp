#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <bitap/harness.hpp>

using namespace bitap;
namespace fs = std::filesystem;

static std::string fresh_dir(const std::string& slug) {
    fs::path p = fs::temp_directory_path() / ("bitap_harness_" + slug);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

static std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

TEST_CASE("config files parse with comments and overrides", "[harness]") {
    std::string dir = fresh_dir("config");
    {
        std::ofstream f(dir + "/exp.cfg");
        f << "# an experiment\n"
          << "model = column_orthogonal\n"
          << "n1=128\n"
          << "n2 = 64\n"
          << "beta=3.5\n"
          << "seeds = 4,5,6\n"
          << "T=25\n"
          << "route=green\n";
    }
    ExperimentConfig cfg;
    for (const auto& [k, v] : read_config_file(dir + "/exp.cfg")) apply_kv(cfg, k, v);
    REQUIRE(cfg.model == Model::ColumnOrthogonal);
    REQUIRE(cfg.n1 == 128);
    REQUIRE(cfg.n2 == 64);
    REQUIRE(cfg.beta == 3.5);
    REQUIRE(cfg.seeds == std::vector<std::uint64_t>{4, 5, 6});
    REQUIRE(cfg.horizon == 25);
    REQUIRE(cfg.route == Route::Green);
    // untouched keys keep their defaults
    REQUIRE(cfg.h1 == 2.0);
    REQUIRE(cfg.damping == 0.5);

    // flag-style override on top of the file
    apply_kv(cfg, "beta", "1.25");
    REQUIRE(cfg.beta == 1.25);
}

TEST_CASE("config rejects malformed input", "[harness]") {
    ExperimentConfig cfg;
    REQUIRE_THROWS_AS(apply_kv(cfg, "n1", "twelve"), usage_error);
    REQUIRE_THROWS_AS(apply_kv(cfg, "beta", "2.0x"), usage_error);
    REQUIRE_THROWS_AS(apply_kv(cfg, "seeds", "1,,oops"), usage_error);
    REQUIRE_THROWS_AS(apply_kv(cfg, "route", "sideways"), usage_error);
    REQUIRE_THROWS_AS(apply_kv(cfg, "frobnicate", "1"), usage_error);

    ExperimentConfig bad;
    bad.n2 = bad.n1 + 1;
    REQUIRE_THROWS_AS(validate_config(bad), usage_error);
    bad = ExperimentConfig{};
    bad.damping = 0.0;
    REQUIRE_THROWS_AS(validate_config(bad), usage_error);
    bad = ExperimentConfig{};
    bad.order = 4;
    REQUIRE_THROWS_AS(validate_config(bad), usage_error);
}

TEST_CASE("gen writes loadable matrices and spectra", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 48;
    cfg.n2 = 24;
    cfg.seeds = {2};
    cfg.outdir = fresh_dir("gen");
    REQUIRE(cmd_gen(cfg) == 0);
    CouplingMatrix loaded = load_matrix(cfg.outdir + "/w_iid_gaussian_2.bitap");
    CouplingMatrix fresh = sample_matrix(cfg, 2);
    REQUIRE((loaded.entries.array() == fresh.entries.array()).all());
    Eigen::VectorXd sig = load_spectrum(cfg.outdir + "/spectrum_iid_gaussian_2.txt");
    REQUIRE(sig.size() == 24);
    REQUIRE((sig - compute_svd(fresh).sigmas).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("solve emits the order parameters with config echo", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 64; // analytic route only needs the aspect ratio
    cfg.n2 = 32;
    cfg.outdir = fresh_dir("solve");
    REQUIRE(cmd_solve(cfg) == 0);
    ordered_json j;
    std::ifstream(cfg.outdir + "/order_params_iid_gaussian_analytic.json") >> j;
    REQUIRE(j["config"]["model"] == "iid_gaussian");
    REQUIRE(j["config"]["T"] == "60");
    REQUIRE(std::abs(j["order_params"]["chi1"].get<double>() - 0.149642196743902) < 1e-8);
    REQUIRE(j["stability"]["at_stable"].get<bool>());
    REQUIRE(std::abs(j["theta"]["a12"].get<double>() - 0.172382902485325) < 1e-8);
}

TEST_CASE("solve reruns are byte-identical", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 64;
    cfg.n2 = 32;
    cfg.outdir = fresh_dir("repro_a");
    REQUIRE(cmd_solve(cfg) == 0);
    std::string first = slurp(cfg.outdir + "/order_params_iid_gaussian_analytic.json");
    REQUIRE(cmd_solve(cfg) == 0);
    std::string second = slurp(cfg.outdir + "/order_params_iid_gaussian_analytic.json");
    REQUIRE(first == second);
}

TEST_CASE("run reports convergence and writes trajectories", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 128;
    cfg.n2 = 64;
    cfg.seeds = {1};
    cfg.outdir = fresh_dir("run");
    REQUIRE(cmd_run(cfg) == 0);
    std::string csv = slurp(cfg.outdir + "/trajectory_iid_gaussian_1.csv");
    REQUIRE(csv.rfind("# model=iid_gaussian\n", 0) == 0);
    REQUIRE(csv.find("t,delta1,delta2\n") != std::string::npos);
    ordered_json j;
    std::ifstream(cfg.outdir + "/result_iid_gaussian_1.json") >> j;
    REQUIRE(j["converged"].get<bool>());
    REQUIRE(j["residual"].get<double>() < 1e-3);
}

TEST_CASE("run signals a missed tolerance through the convergence error", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 64;
    cfg.n2 = 32;
    cfg.seeds = {1};
    cfg.horizon = 3; // far too short for tol 1e-10
    cfg.outdir = fresh_dir("run_short");
    REQUIRE_THROWS_AS(cmd_run(cfg), convergence_error);
    // outputs are still written for inspection
    REQUIRE(fs::exists(cfg.outdir + "/trajectory_iid_gaussian_1.csv"));
}

TEST_CASE("compare produces covariance and rate reports", "[harness]") {
    ExperimentConfig cfg;
    cfg.n1 = 512;
    cfg.n2 = 256;
    cfg.seeds = {1, 2};
    cfg.horizon = 16;
    cfg.order = 24;
    cfg.outdir = fresh_dir("compare");
    REQUIRE(cmd_compare(cfg) == 0);
    ordered_json j;
    std::ifstream(cfg.outdir + "/compare_iid_gaussian.json") >> j;
    REQUIRE(std::abs(j["mu_gamma"].get<double>() - 0.106871248640356) < 1e-6);
    REQUIRE(j["median_delta_c_block1"].get<double>() < 0.5);
    REQUIRE(j["median_delta_c_block2"].get<double>() < 0.5);
    double slope = j["rate_fit_block1"]["slope"].get<double>();
    REQUIRE(std::abs(slope - std::log(0.106871248640356)) / std::abs(std::log(0.106871248640356)) <
            0.25);
    std::string csv = slurp(cfg.outdir + "/deltac_iid_gaussian.csv");
    REQUIRE(csv.find("t,s,block,theory,empirical,delta_c\n") != std::string::npos);
}

TEST_CASE("slope fit recovers an exact geometric decay", "[harness]") {
    std::vector<double> deltas;
    const double mu = 0.2, d0 = 3.4;
    for (int t = 1; t <= 30; ++t) deltas.push_back(d0 * std::pow(mu, t));
    SlopeFit fit = fit_log_slope(deltas);
    REQUIRE(fit.slope == Catch::Approx(std::log(mu)).margin(1e-12));
    // entries at the numerical floor are excluded from the window
    std::vector<double> floored = deltas;
    for (int i = 0; i < 10; ++i) floored.push_back(1e-29);
    SlopeFit fit2 = fit_log_slope(floored);
    REQUIRE(fit2.t_hi <= 30);
    REQUIRE(fit2.slope == Catch::Approx(std::log(mu)).margin(1e-9));
}

TEST_CASE("seed list formatting round-trips", "[harness]") {
    REQUIRE(seeds_from_string("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
    REQUIRE(seeds_to_string({10, 20}) == "10,20");
    REQUIRE_THROWS_AS(seeds_from_string(""), usage_error);
    REQUIRE_THROWS_AS(seeds_from_string("a,b"), usage_error);
}
