// Scenario runner for the extreme-value experiments. All randomness derives
// from the --seed value, so identical invocations produce identical reports.

#include "evlab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"evlab: extreme value laws for sequential and random dynamics"};
    app.require_subcommand(0, 1);

    evlab::RunOptions opts;
    std::uint64_t seed = 0;
    bool seed_given = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write report.json");
    run->add_option("--scenario", opts.scenario, "scenario name (see `list`)")->required();
    run->add_option("--config", opts.config_path, "JSON file merged over the scenario defaults");
    auto* seed_opt = run->add_option("--seed", seed, "64-bit master seed");
    run->add_option("--out", opts.out_dir, "output directory (default .)");
    run->add_flag("--dump", opts.dump, "also write CSV dumps");
    run->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
    run->add_option("--precision", opts.precision, "orbit arithmetic: auto|exact|float");

    std::string filter;
    bool as_json = false;
    CLI::App* list = app.add_subcommand("list", "list available scenarios");
    list->add_option("--filter", filter, "substring filter");
    list->add_flag("--json", as_json, "machine-readable output");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        std::cout << (as_json ? evlab::list_scenarios_json(filter)
                              : evlab::list_scenarios_text(filter));
        return 0;
    }
    if (!run->parsed()) {
        std::cout << app.help();
        return 0;
    }
    seed_given = seed_opt->count() > 0;
    if (seed_given) opts.seed = seed;
    return evlab::run_scenario(opts, std::cout);
}
