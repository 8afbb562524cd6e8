// Command-line front end: simulate | verify | derive | sweep.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eulertop/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Integrable deformations of the Euler top: synthesis, "
                 "integration and verification"};
    app.require_subcommand(1);

    eulertop::cli::Options opts;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "run configuration (JSON)")
            ->required();
        cmd->add_option("--seed", seed_value, "override the config random seed")
            ->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--workers", opts.workers, "concurrent runs for sweep")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* simulate = app.add_subcommand("simulate", "integrate and write trajectory + report");
    CLI::App* verify = app.add_subcommand("verify", "run the invariant identity and drift checks");
    CLI::App* derive = app.add_subcommand("derive", "print the synthesized vector field");
    CLI::App* sweep = app.add_subcommand("sweep", "run simulate over a list of parameter values");
    add_common(simulate);
    add_common(verify);
    add_common(derive);
    add_common(sweep);

    std::string sweep_param = "g";
    std::vector<double> sweep_values;
    sweep->add_option("--param", sweep_param, "parameter to sweep");
    sweep->add_option("--values", sweep_values, "comma separated parameter values")
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    if (seed_given) opts.seed = seed_value;

    if (simulate->parsed()) return eulertop::cli::cmd_simulate(opts);
    if (verify->parsed()) return eulertop::cli::cmd_verify(opts);
    if (derive->parsed()) return eulertop::cli::cmd_derive(opts);
    if (sweep->parsed()) return eulertop::cli::cmd_sweep(opts, sweep_param, sweep_values);
    return eulertop::cli::kConfigError;
}
