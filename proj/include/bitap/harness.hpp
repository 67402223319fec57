#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bitap/dft.hpp"
#include "bitap/ensembles.hpp"
#include "bitap/errors.hpp"
#include "bitap/generating.hpp"
#include "bitap/io.hpp"
#include "bitap/order_params.hpp"
#include "bitap/tap.hpp"

namespace bitap {

enum class Route { Analytic, Green };

inline std::string route_name(Route r) { return r == Route::Analytic ? "analytic" : "green"; }

inline Route route_from_name(const std::string& s) {
    if (s == "analytic") return Route::Analytic;
    if (s == "green") return Route::Green;
    throw usage_error("unknown route '" + s + "' (expected analytic or green)");
}

inline std::string default_outdir() {
    const char* e = std::getenv("BITAP_OUTDIR");
    return (e && *e) ? std::string(e) : std::string(".");
}

// One experiment = ensemble + geometry + fields + solver/dynamics knobs.
// Config files are flat key=value lines ('#' starts a comment); command-line
// flags override file values in the driver.
struct ExperimentConfig {
    Model model = Model::IidGaussian;
    int n1 = 4096;
    int n2 = 2048;
    double beta = 2.0;
    double h1 = 2.0;
    double h2 = 1.0;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int horizon = 60; // key "T"
    double tol = 1e-10;
    int order = 60;
    double damping = 0.5;
    Route route = Route::Analytic;
    std::string outdir = default_outdir();
    std::string spectrum_file; // singular values for the custom ensemble / green route
    // threshold-search bracket
    double beta_lo = 1.0;
    double beta_hi = 50.0;
    double mu_tol = 1e-4;

    double alpha() const { return double(n2) / double(n1); }
};

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n1 < 1 || cfg.n2 < 1 || cfg.n2 > cfg.n1)
        throw usage_error("config: need n1 >= n2 >= 1");
    if (!(cfg.beta > 0.0)) throw usage_error("config: beta must be positive");
    if (cfg.seeds.empty()) throw usage_error("config: need at least one seed");
    if (cfg.horizon < 1) throw usage_error("config: T must be at least 1");
    if (!(cfg.tol >= 0.0)) throw usage_error("config: tol must be nonnegative");
    if (cfg.order < 8) throw usage_error("config: order must be at least 8");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
        throw usage_error("config: damping must be in (0, 1]");
}

inline std::string seeds_to_string(const std::vector<std::uint64_t>& seeds) {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(seeds[i]);
    }
    return s;
}

inline std::vector<std::uint64_t> seeds_from_string(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &pos);
        } catch (const std::exception&) {
            throw usage_error("config: bad seed '" + tok + "'");
        }
        if (pos != tok.size()) throw usage_error("config: bad seed '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw usage_error("config: empty seed list");
    return out;
}

// key=value lines; later keys win; '#' comments and blank lines are skipped.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw usage_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        auto b = s.find_first_not_of(ws);
        auto e = s.find_last_not_of(ws);
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw usage_error("config " + path + ":" + std::to_string(lineno) +
                              ": expected key=value, got '" + t + "'");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

inline void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto to_d = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw usage_error("config: bad numeric value '" + value + "' for key " + key);
        }
    };
    auto to_i = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            int i = std::stoi(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return i;
        } catch (const std::exception&) {
            throw usage_error("config: bad integer value '" + value + "' for key " + key);
        }
    };
    if (key == "model") cfg.model = model_from_name(value);
    else if (key == "n1") cfg.n1 = to_i(value);
    else if (key == "n2") cfg.n2 = to_i(value);
    else if (key == "beta") cfg.beta = to_d(value);
    else if (key == "h1") cfg.h1 = to_d(value);
    else if (key == "h2") cfg.h2 = to_d(value);
    else if (key == "seeds") cfg.seeds = seeds_from_string(value);
    else if (key == "T") cfg.horizon = to_i(value);
    else if (key == "tol") cfg.tol = to_d(value);
    else if (key == "order") cfg.order = to_i(value);
    else if (key == "damping") cfg.damping = to_d(value);
    else if (key == "route") cfg.route = route_from_name(value);
    else if (key == "outdir") cfg.outdir = value;
    else if (key == "spectrum") cfg.spectrum_file = value;
    else if (key == "beta_lo") cfg.beta_lo = to_d(value);
    else if (key == "beta_hi") cfg.beta_hi = to_d(value);
    else if (key == "mu_tol") cfg.mu_tol = to_d(value);
    else throw usage_error("config: unknown key '" + key + "'");
}

inline std::vector<std::pair<std::string, std::string>> config_kv(const ExperimentConfig& cfg) {
    return {
        {"model", model_name(cfg.model)},
        {"n1", std::to_string(cfg.n1)},
        {"n2", std::to_string(cfg.n2)},
        {"beta", fmt_g17(cfg.beta)},
        {"h1", fmt_g17(cfg.h1)},
        {"h2", fmt_g17(cfg.h2)},
        {"seeds", seeds_to_string(cfg.seeds)},
        {"T", std::to_string(cfg.horizon)},
        {"tol", fmt_g17(cfg.tol)},
        {"order", std::to_string(cfg.order)},
        {"damping", fmt_g17(cfg.damping)},
        {"route", route_name(cfg.route)},
        {"outdir", cfg.outdir},
    };
}

inline ordered_json config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    for (const auto& [k, v] : config_kv(cfg)) j[k] = v;
    ordered_json seeds = ordered_json::array();
    for (auto s : cfg.seeds) seeds.push_back(s);
    j["seeds"] = seeds;
    return j;
}

inline SolverConfig solver_config(const ExperimentConfig& cfg, int max_iter = 200000) {
    SolverConfig sc;
    sc.damping = cfg.damping;
    sc.tol = cfg.tol < 1e-10 ? cfg.tol : 1e-10; // order parameters at least as tight as dynamics
    sc.max_iter = max_iter;
    sc.quad_order = cfg.order;
    return sc;
}

inline CouplingMatrix sample_matrix(const ExperimentConfig& cfg, std::uint64_t seed) {
    switch (cfg.model) {
        case Model::IidGaussian:
            return sample_iid_gaussian(cfg.n1, cfg.n2, cfg.beta, seed);
        case Model::ColumnOrthogonal:
            return sample_column_orthogonal(cfg.n1, cfg.n2, cfg.beta, seed);
        case Model::CustomSpectrum: {
            if (cfg.spectrum_file.empty())
                throw usage_error("custom_spectrum ensemble needs spectrum=<file>");
            Eigen::VectorXd sig = load_spectrum(cfg.spectrum_file);
            return sample_from_singular_values(cfg.n1, cfg.n2, sig, seed);
        }
    }
    throw usage_error("unknown ensemble");
}

struct TheoryResult {
    OrderParams op;
    ThetaCoefficients theta;
    StabilityReport stability;
    GeneratingFunction gf;
};

// Closed-form route for the analytic ensembles; spectral (Green-function)
// route otherwise — from the given spectrum file if set, else from the SVD of
// the first seed's sampled matrix.
inline TheoryResult solve_theory(const ExperimentConfig& cfg) {
    validate_config(cfg);
    SolverConfig sc = solver_config(cfg);
    TheoryResult tr;
    if (cfg.route == Route::Analytic) {
        if (cfg.model == Model::IidGaussian)
            tr.gf = GeneratingFunction::iid(cfg.alpha(), cfg.beta);
        else if (cfg.model == Model::ColumnOrthogonal)
            tr.gf = GeneratingFunction::column_orthogonal(cfg.alpha(), cfg.beta);
        else
            throw usage_error("custom_spectrum has no closed-form route; use route=green");
        tr.op = solve_rs_fixed_point(tr.gf, cfg.h1, cfg.h2, cfg.alpha(), sc);
        tr.theta = theta_analytic(tr.op, tr.gf);
    } else {
        GreenFunction g;
        if (!cfg.spectrum_file.empty()) {
            Eigen::VectorXd sig = load_spectrum(cfg.spectrum_file);
            if (sig.size() != cfg.n2)
                throw usage_error("spectrum file holds " + std::to_string(sig.size()) +
                                  " values but n2 = " + std::to_string(cfg.n2));
            g = green_from_spectrum(sig.array().square().matrix(), cfg.alpha(), cfg.n1, cfg.n2);
        } else {
            CouplingMatrix w = sample_matrix(cfg, cfg.seeds.front());
            g = green_from_spectral(compute_svd(w), cfg.alpha());
        }
        tr.gf = GeneratingFunction::spectrum(g);
        tr.op = solve_green_fixed_point(g, cfg.h1, cfg.h2, cfg.alpha(), sc);
        tr.theta = theta_green(tr.op, g);
    }
    tr.stability = stability_report(tr.op, tr.gf, cfg.order);
    return tr;
}

inline ordered_json order_params_json(const OrderParams& op) {
    ordered_json j;
    j["chi1"] = json_num(op.chi1);
    j["chi2"] = json_num(op.chi2);
    j["qhat1"] = json_num(op.qhat1);
    j["qhat2"] = json_num(op.qhat2);
    j["psi1"] = json_num(op.psi1);
    j["psi2"] = json_num(op.psi2);
    j["chi"] = json_num(op.chi);
    j["lambda"] = json_num(op.lambda);
    j["iters"] = op.iters;
    j["residual"] = json_num(op.residual);
    j["clamp_events"] = op.clamp_events;
    j["lambda_clamps"] = op.lambda_clamps;
    return j;
}

inline ordered_json theta_json(const ThetaCoefficients& th) {
    ordered_json j;
    j["a11"] = json_num(th.a11);
    j["a12"] = json_num(th.a12);
    j["a21"] = json_num(th.a21);
    j["a22"] = json_num(th.a22);
    return j;
}

inline ordered_json stability_json(const StabilityReport& st) {
    ordered_json j;
    j["r1_prime"] = json_num(st.r1p);
    j["r2_prime"] = json_num(st.r2p);
    j["eta1"] = json_num(st.eta1);
    j["eta2"] = json_num(st.eta2);
    j["at_stable"] = st.at_stable;
    j["chi2_11"] = json_num(st.chi2_11);
    j["chi2_22"] = json_num(st.chi2_22);
    j["chi2_12"] = json_num(st.chi2_12);
    j["critical_psi_warning"] = st.critical_psi_warning;
    return j;
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.outdir);
    return (std::filesystem::path(cfg.outdir) / name).string();
}

inline std::string file_tag(const ExperimentConfig& cfg) { return model_name(cfg.model); }

// --- gen: sample matrices, store them with sidecars, store their spectra ---

inline int cmd_gen(const ExperimentConfig& cfg) {
    validate_config(cfg);
    for (std::uint64_t seed : cfg.seeds) {
        CouplingMatrix w = sample_matrix(cfg, seed);
        SpectralData sd = compute_svd(w);
        std::string wtag = "w_" + file_tag(cfg) + "_" + std::to_string(seed) + ".bitap";
        std::string stag = "spectrum_" + file_tag(cfg) + "_" + std::to_string(seed) + ".txt";
        save_matrix(out_path(cfg, wtag), w);
        save_spectrum(out_path(cfg, stag), sd.sigmas);
        std::cout << "wrote " << out_path(cfg, wtag) << " (n1=" << w.n1 << " n2=" << w.n2
                  << " beta=" << fmt_g17(w.beta) << ")\n";
        std::cout << "wrote " << out_path(cfg, stag) << "\n";
    }
    return 0;
}

// --- solve: order parameters + stability on the chosen route ---

inline int cmd_solve(const ExperimentConfig& cfg) {
    TheoryResult tr = solve_theory(cfg);
    ordered_json j;
    j["config"] = config_json(cfg);
    j["order_params"] = order_params_json(tr.op);
    j["theta"] = theta_json(tr.theta);
    j["stability"] = stability_json(tr.stability);
    std::string name = "order_params_" + file_tag(cfg) + "_" + route_name(cfg.route) + ".json";
    save_json(out_path(cfg, name), j);
    std::cout << "chi1=" << fmt_g17(tr.op.chi1) << " chi2=" << fmt_g17(tr.op.chi2)
              << " qhat1=" << fmt_g17(tr.op.qhat1) << " qhat2=" << fmt_g17(tr.op.qhat2)
              << " (" << tr.op.iters << " iterations)\n";
    std::cout << "AT stable: " << (tr.stability.at_stable ? "yes" : "no") << "\n";
    std::cout << "wrote " << out_path(cfg, name) << "\n";
    return 0;
}

// --- run: iterate the dynamics per seed, store step sizes and a summary ---

inline int cmd_run(const ExperimentConfig& cfg) {
    TheoryResult tr = solve_theory(cfg);
    std::vector<std::uint64_t> missed;
    for (std::uint64_t seed : cfg.seeds) {
        CouplingMatrix w = sample_matrix(cfg, seed);
        TapOperator a = build_operator(compute_svd(w), tr.op);
        Trajectory traj;
        MagnetizationResult res = run(a, tr.op, cfg.horizon, seed, cfg.tol, &w, &traj);

        std::string tname = "trajectory_" + file_tag(cfg) + "_" + std::to_string(seed) + ".csv";
        CsvWriter csv(out_path(cfg, tname));
        csv.config(config_kv(cfg));
        csv.header({"t", "delta1", "delta2"});
        for (std::size_t t = 0; t < traj.delta1.size(); ++t)
            csv.row({std::to_string(t + 1), CsvWriter::num(traj.delta1[t]),
                     CsvWriter::num(traj.delta2[t])});

        ordered_json j;
        j["config"] = config_json(cfg);
        j["seed"] = seed;
        j["iters"] = res.iters;
        j["converged"] = res.converged;
        j["residual"] = json_num(res.residual);
        j["m1_mean"] = json_num(res.m1.mean());
        j["m2_mean"] = json_num(res.m2.mean());
        j["m1_abs_mean"] = json_num(res.m1.cwiseAbs().mean());
        j["m2_abs_mean"] = json_num(res.m2.cwiseAbs().mean());
        std::string rname = "result_" + file_tag(cfg) + "_" + std::to_string(seed) + ".json";
        save_json(out_path(cfg, rname), j);
        std::cout << "seed " << seed << ": " << (res.converged ? "converged" : "hit horizon")
                  << " after " << res.iters << " steps, residual " << fmt_g17(res.residual)
                  << "\n";
        if (!res.converged && cfg.tol > 0.0) missed.push_back(seed);
    }
    if (!missed.empty())
        throw convergence_error("run: tolerance " + fmt_g17(cfg.tol) + " not reached within T=" +
                                std::to_string(cfg.horizon) + " steps for seed(s) " +
                                seeds_to_string(missed) + " (outputs were still written)");
    return 0;
}

// --- compare: theory covariances and rate against simulated trajectories ---

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    int t_lo = 0, t_hi = 0; // inclusive window in step index (1-based)
    int npoints = 0;
};

// Least-squares slope of ln(delta) vs t over an automatic window: skip the
// first two transient steps, stop at the numerical floor (values can stall or
// bounce around 1e-30 once the iteration reaches double-precision limits).
inline SlopeFit fit_log_slope(const std::vector<double>& delta, double floor = 1e-26) {
    SlopeFit fit;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 2; i < delta.size(); ++i) {
        if (!(delta[i] > floor)) break;
        pts.emplace_back(double(i + 1), std::log(delta[i]));
    }
    if (pts.size() < 4) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = double(pts.size());
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.t_lo = int(pts.front().first);
    fit.t_hi = int(pts.back().first);
    fit.npoints = int(pts.size());
    return fit;
}

// gamma_k(t) . gamma_k(s) / n_k averaged over seeds, for 1 <= t, s <= T.
inline Eigen::MatrixXd empirical_covariance(const std::vector<Trajectory>& trajs, int block,
                                            int horizon) {
    if (trajs.empty()) throw usage_error("empirical_covariance: no trajectories");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(horizon, horizon);
    for (const Trajectory& tr : trajs) {
        const auto& gam = block == 1 ? tr.gamma1 : tr.gamma2;
        if (int(gam.size()) < horizon + 1)
            throw usage_error("empirical_covariance: trajectory shorter than horizon");
        const Eigen::Index n = gam[0].size();
        Eigen::MatrixXd g(n, horizon);
        for (int t = 1; t <= horizon; ++t) g.col(t - 1) = gam[t];
        acc.noalias() += g.transpose() * g / double(n);
    }
    return acc / double(trajs.size());
}

inline int cmd_compare(const ExperimentConfig& cfg) {
    TheoryResult tr = solve_theory(cfg);
    TwoTimeCovariance cov = covariance_recursion(tr.theta, tr.op, cfg.horizon, cfg.order);
    double g1p = g_prime(cfg.h1, tr.op.chi1, tr.op.qhat1, cfg.order);
    double g2p = g_prime(cfg.h2, tr.op.chi2, tr.op.qhat2, cfg.order);
    ConvergenceReport rep = mu_gamma(tr.theta, g1p, g2p, &cov);

    std::vector<Trajectory> trajs;
    for (std::uint64_t seed : cfg.seeds) {
        CouplingMatrix w = sample_matrix(cfg, seed);
        TapOperator a = build_operator(compute_svd(w), tr.op);
        Trajectory traj;
        run(a, tr.op, cfg.horizon, seed, 0.0, nullptr, &traj); // tol 0: full horizon
        trajs.push_back(std::move(traj));
    }

    Eigen::MatrixXd emp1 = empirical_covariance(trajs, 1, cfg.horizon);
    Eigen::MatrixXd emp2 = empirical_covariance(trajs, 2, cfg.horizon);

    std::string dname = "deltac_" + file_tag(cfg) + ".csv";
    CsvWriter dcsv(out_path(cfg, dname));
    dcsv.config(config_kv(cfg));
    dcsv.header({"t", "s", "block", "theory", "empirical", "delta_c"});
    double max_dc_small[2] = {0.0, 0.0};
    std::vector<double> dc_small[2];
    for (int b = 1; b <= 2; ++b) {
        const Eigen::MatrixXd& th = b == 1 ? cov.c1 : cov.c2;
        const Eigen::MatrixXd& em = b == 1 ? emp1 : emp2;
        for (int i = 0; i < cfg.horizon; ++i) {
            for (int j = 0; j < cfg.horizon; ++j) {
                // relative squared error between predicted and sampled covariances
                double rel = (th(i, j) - em(i, j)) / th(i, j);
                double dc = rel * rel;
                dcsv.row({std::to_string(i + 1), std::to_string(j + 1), std::to_string(b),
                          CsvWriter::num(th(i, j)), CsvWriter::num(em(i, j)),
                          CsvWriter::num(dc)});
                if (i < 8 && j < 8) {
                    dc_small[b - 1].push_back(dc);
                    max_dc_small[b - 1] = std::max(max_dc_small[b - 1], dc);
                }
            }
        }
    }
    auto median = [](std::vector<double> v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(v.begin(), v.end());
        std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };

    std::string rname = "rate_" + file_tag(cfg) + ".csv";
    CsvWriter rcsv(out_path(cfg, rname));
    rcsv.config(config_kv(cfg));
    rcsv.header({"t", "delta1_empirical", "delta2_empirical", "delta1_predicted",
                 "delta2_predicted"});
    std::vector<double> d1(cfg.horizon, 0.0), d2(cfg.horizon, 0.0);
    for (const Trajectory& t : trajs)
        for (int i = 0; i < cfg.horizon; ++i) {
            d1[i] += t.delta1[i] / double(trajs.size());
            d2[i] += t.delta2[i] / double(trajs.size());
        }
    for (int i = 0; i < cfg.horizon; ++i)
        rcsv.row({std::to_string(i + 1), CsvWriter::num(d1[i]), CsvWriter::num(d2[i]),
                  CsvWriter::num(rep.predicted_delta1[i]), CsvWriter::num(rep.predicted_delta2[i])});

    SlopeFit fit1 = fit_log_slope(d1);
    SlopeFit fit2 = fit_log_slope(d2);

    ordered_json j;
    j["config"] = config_json(cfg);
    j["mu_gamma"] = json_num(rep.mu);
    j["ln_mu_gamma"] = json_num(std::log(rep.mu));
    j["stable"] = rep.stable;
    j["g1_prime"] = json_num(g1p);
    j["g2_prime"] = json_num(g2p);
    j["median_delta_c_block1"] = json_num(median(dc_small[0]));
    j["median_delta_c_block2"] = json_num(median(dc_small[1]));
    j["max_delta_c_block1"] = json_num(max_dc_small[0]);
    j["max_delta_c_block2"] = json_num(max_dc_small[1]);
    auto fit_json = [](const SlopeFit& f) {
        ordered_json fj;
        fj["slope"] = json_num(f.slope);
        fj["t_lo"] = f.t_lo;
        fj["t_hi"] = f.t_hi;
        fj["npoints"] = f.npoints;
        return fj;
    };
    j["rate_fit_block1"] = fit_json(fit1);
    j["rate_fit_block2"] = fit_json(fit2);
    std::string jname = "compare_" + file_tag(cfg) + ".json";
    save_json(out_path(cfg, jname), j);

    std::cout << "mu_gamma=" << fmt_g17(rep.mu) << " ln_mu=" << fmt_g17(std::log(rep.mu))
              << "\n";
    std::cout << "median dC (t,s<=8): block1 " << fmt_g17(median(dc_small[0])) << ", block2 "
              << fmt_g17(median(dc_small[1])) << "\n";
    std::cout << "fitted ln-slopes: block1 " << fmt_g17(fit1.slope) << ", block2 "
              << fmt_g17(fit2.slope) << "\n";
    std::cout << "wrote " << out_path(cfg, dname) << ", " << out_path(cfg, rname) << ", "
              << out_path(cfg, jname) << "\n";
    return 0;
}

// --- threshold: bisect the instability point of an analytic ensemble ---

inline int cmd_threshold(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.model == Model::CustomSpectrum)
        throw usage_error("threshold search needs an analytic ensemble (iid or column-orthogonal)");
    SolverConfig sc = solver_config(cfg);
    sc.tol = std::min(sc.tol, 1e-12);
    double beta_star = instability_bisection(cfg.model, cfg.alpha(), cfg.h1, cfg.h2, cfg.beta_lo,
                                             cfg.beta_hi, cfg.mu_tol, sc);

    // coarse grid for a monotonicity sanity check around the bracket
    const int grid_n = 20;
    ordered_json grid = ordered_json::array();
    bool monotone = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_n; ++i) {
        double beta = cfg.beta_lo + (cfg.beta_hi - cfg.beta_lo) * i / double(grid_n - 1);
        ordered_json pt;
        pt["beta"] = json_num(beta);
        double mu = std::numeric_limits<double>::quiet_NaN();
        try {
            mu = mu_gamma_at(cfg.model, cfg.alpha(), beta, cfg.h1, cfg.h2, sc);
        } catch (const bitap_error&) {
            // spectral-edge contact or non-convergence past the instability
        }
        pt["mu_gamma"] = json_num(mu);
        grid.push_back(pt);
        if (std::isfinite(mu)) {
            if (mu < prev) monotone = false;
            prev = mu;
        }
    }

    ordered_json j;
    j["config"] = config_json(cfg);
    j["beta_lo"] = json_num(cfg.beta_lo);
    j["beta_hi"] = json_num(cfg.beta_hi);
    j["mu_tol"] = json_num(cfg.mu_tol);
    j["beta_star"] = json_num(beta_star);
    j["grid"] = grid;
    j["grid_monotone"] = monotone;
    std::string name = "threshold_" + file_tag(cfg) + ".json";
    save_json(out_path(cfg, name), j);
    std::cout << "beta_star=" << fmt_g17(beta_star) << " (|mu-1| < " << fmt_g17(cfg.mu_tol)
              << ")\n";
    std::cout << "wrote " << out_path(cfg, name) << "\n";
    return 0;
}

} // namespace bitap
