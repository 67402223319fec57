// Command-line driver around the bitap library.
//
//   bitap gen        sample coupling matrices and store them with spectra
//   bitap solve      order parameters + stability on the analytic or green route
//   bitap run        iterate the magnetization dynamics per seed
//   bitap compare    theory covariances / rate vs simulated trajectories
//   bitap threshold  bisect the instability coupling strength beta*
//
// Every option can also come from a flat key=value config file (--config);
// explicit flags override file values, which override built-in defaults.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <bitap/bitap.hpp>

namespace {

struct CommonOpts {
    std::map<std::string, std::string> vals;
    std::vector<std::pair<std::string, CLI::Option*>> opts;
    std::string config_path;
};

void add_common(CLI::App* sub, CommonOpts& co) {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"model", "ensemble: iid_gaussian, column_orthogonal, custom_spectrum"},
        {"n1", "visible layer size"},
        {"n2", "hidden layer size (n2 <= n1)"},
        {"beta", "coupling strength"},
        {"h1", "visible external field"},
        {"h2", "hidden external field"},
        {"seeds", "comma-separated seed list, e.g. 1,2,3"},
        {"T", "dynamics horizon (steps)"},
        {"tol", "convergence tolerance"},
        {"order", "quadrature nodes per unit-width panel (>= 8)"},
        {"damping", "fixed-point damping in (0, 1]"},
        {"route", "theory route: analytic or green"},
        {"outdir", "output directory (default $BITAP_OUTDIR or .)"},
        {"spectrum", "singular-value file for custom_spectrum / green route"},
        {"beta_lo", "threshold bracket: lower beta"},
        {"beta_hi", "threshold bracket: upper beta"},
        {"mu_tol", "threshold bisection tolerance on |mu - 1|"},
    };
    for (const auto& [key, help] : keys)
        co.opts.emplace_back(key, sub->add_option("--" + key, co.vals[key], help));
    sub->add_option("--config", co.config_path, "flat key=value config file");
}

bitap::ExperimentConfig build_config(const CommonOpts& co) {
    bitap::ExperimentConfig cfg;
    if (!co.config_path.empty())
        for (const auto& [k, v] : bitap::read_config_file(co.config_path))
            bitap::apply_kv(cfg, k, v);
    for (const auto& [key, opt] : co.opts)
        if (opt->count() > 0) bitap::apply_kv(cfg, key, co.vals.at(key));
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TAP magnetizations and convergence theory for bipartite spin models"};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen", "sample coupling matrices and their spectra");
    CLI::App* solve = app.add_subcommand("solve", "order parameters and stability report");
    CLI::App* run = app.add_subcommand("run", "iterate the magnetization dynamics");
    CLI::App* compare = app.add_subcommand("compare", "theory vs simulated trajectories");
    CLI::App* threshold = app.add_subcommand("threshold", "bisect the instability point beta*");

    std::map<CLI::App*, CommonOpts> opts;
    for (CLI::App* sub : {gen, solve, run, compare, threshold}) add_common(sub, opts[sub]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : bitap::usage_error::exit_code;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        bitap::ExperimentConfig cfg = build_config(opts[sub]);
        if (sub == gen) return bitap::cmd_gen(cfg);
        if (sub == solve) return bitap::cmd_solve(cfg);
        if (sub == run) return bitap::cmd_run(cfg);
        if (sub == compare) return bitap::cmd_compare(cfg);
        return bitap::cmd_threshold(cfg);
    } catch (const bitap::usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bitap::usage_error::exit_code;
    } catch (const bitap::convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bitap::convergence_error::exit_code;
    } catch (const bitap::numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bitap::numerical_error::exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
