// wvamp: weak-measurement uncertainty scans from a key-value config file.
//
//   wvamp run <config> [--out PATH] [--check-engine] [--mc-trials N] [--seed S]
//   wvamp figure1 [--out PATH]
//
// Exit codes: 0 success, 1 I/O or internal error, 2 invalid command line or
// config, 3 every row left the enabled weak-channel uncertainties undefined.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "wvamp/cli/config.hpp"
#include "wvamp/cli/csv.hpp"
#include "wvamp/cli/recipes.hpp"
#include "wvamp/cli/scan.hpp"
#include "wvamp/errors.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUndefined = 3;

int execute(wvamp::cli::RunConfig cfg) {
    const auto result = wvamp::cli::amplification_scan(cfg);
    if (cfg.out == "-") {
        wvamp::cli::write_csv(result, std::cout);
        std::cout.flush();
        if (!std::cout) throw wvamp::IoError("failed writing to standard output");
    } else {
        wvamp::cli::emit_csv(result, cfg.out);
    }
    if (wvamp::cli::all_weak_undefined(result)) {
        std::cerr << "wvamp: no row has a defined weak-measurement uncertainty (see `reason`)\n";
        return kExitUndefined;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-order uncertainty budgets for amplified weak measurement"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out;
    bool check_engine = false;
    std::optional<std::int64_t> mc_trials;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Evaluate the scan described by a config file");
    run->add_option("config", config_path, "Config file path")->required();
    run->add_option("--out", out, "CSV destination, - for stdout (overrides `out`)");
    run->add_flag("--check-engine", check_engine, "Cross-check each row on the grid engine");
    run->add_option("--mc-trials", mc_trials, "Monte Carlo coverage trials per row and channel")
        ->check(CLI::NonNegativeNumber);
    run->add_option("--seed", seed, "Monte Carlo seed (overrides `seed`)");

    std::optional<std::string> figure_out;
    auto* figure = app.add_subcommand("figure1", "Run the shipped amplification-window recipe");
    figure->add_option("--out", figure_out, "CSV destination, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        wvamp::cli::RunConfig cfg;
        if (*run) {
            cfg = wvamp::cli::load_config(config_path);
            if (out) cfg.out = *out;
            if (check_engine) cfg.check_engine = true;
            if (mc_trials) cfg.mc_trials = *mc_trials;
            if (seed) cfg.seed = *seed;
        } else {
            cfg = wvamp::cli::parse_config(wvamp::cli::figure1_recipe());
            if (figure_out) cfg.out = *figure_out;
        }
        return execute(std::move(cfg));
    } catch (const wvamp::ParseError& e) {
        std::cerr << "wvamp: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const wvamp::ValidationError& e) {
        std::cerr << "wvamp: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "wvamp: error: " << e.what() << '\n';
        return kExitIo;
    }
}
