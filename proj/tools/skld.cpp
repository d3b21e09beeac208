// Command-line front end: `run <config.json>`, `verify`, `emit-plots <dir>`.
// Exit codes: 0 success, 1 validation/verify failure, 2 solver
// non-convergence, 3 Monte Carlo budget exceeded.

#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "skld/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spectral toolkit for damped stochastic wave / heat dynamics, "
                 "quasi-potentials and exit times"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "execute the experiment described by a JSON config");
    run->add_option("config", config_path, "path to the config file")->required();

    std::string verify_out = "results";
    auto* verify = app.add_subcommand("verify", "run the built-in invariant suite");
    verify->add_option("-o,--output-dir", verify_out, "directory for verify.json");

    std::string plots_dir;
    auto* plots = app.add_subcommand("emit-plots", "reformat result JSON into gnuplot .dat files");
    plots->add_option("dir", plots_dir, "results directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        std::string summary;
        const int code = skld::run_config_file(config_path, summary);
        std::printf("%s\n", summary.c_str());
        return code;
    }
    if (verify->parsed()) {
        skld::json config = {{"experiment", {{"type", "verify"}}}, {"output_dir", verify_out}};
        const skld::ExperimentConfig cfg = skld::parse_config(config);
        const auto out = skld::run_experiment(cfg);
        std::printf("%s\n", out.summary.c_str());
        return out.exit_code;
    }
    return skld::emit_plots(plots_dir);
}
