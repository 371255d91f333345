#include <CLI11.hpp>
#include <cstdlib>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace {

struct CliOptions {
    std::vector<std::string> configs;
    std::string out;
    bool oracle = false;
    bool plot_data = false;
    int jobs = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_options(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.configs, "Scenario config file (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out,
                    "Output root directory (default: MSF_OUT_DIR, then the "
                    "config's output_dir, then ./out)");
    sub->add_flag("--oracle", opt.oracle,
                  "Run the grid oracle alongside the filter and report "
                  "per-step TV (filter mode; compare implies it)");
    sub->add_flag("--plot-data", opt.plot_data,
                  "Also emit a long-format plot.csv per scenario");
    sub->add_option("--jobs", opt.jobs,
                    "Run this many configs concurrently (scenarios are "
                    "independent)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "Override the config's simulation seed")
        ->each([&](const std::string&) { opt.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Moment-based filtering of scalar linear systems with rational "
        "density surrogates"};
    app.require_subcommand(1);

    CliOptions opt;
    const char* descriptions[][2] = {
        {"fit", "Fit a density surrogate to a target and report diagnostics"},
        {"filter", "Run the surrogate Bayesian filter over observations"},
        {"bound", "Compute the entropy-based total-variation error bound"},
        {"compare", "Run the filter and the grid oracle side by side"},
    };
    for (const auto& d : descriptions)
        add_common_options(app.add_subcommand(d[0], d[1]), opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // command-line problems are config errors
    }

    const std::string command = app.get_subcommands().front()->get_name();

    msf::cli::RunOptions run_opts;
    if (!opt.out.empty()) {
        run_opts.out_dir = opt.out;
    } else if (const char* env = std::getenv("MSF_OUT_DIR"); env && *env) {
        run_opts.out_dir = env;
    }
    run_opts.oracle = opt.oracle;
    run_opts.plot_data = opt.plot_data;
    if (opt.seed_set) run_opts.seed_override = opt.seed;

    // Scenarios are independent; --jobs N runs up to N of them at once.
    // The exit code is the first failing config's, in command-line order.
    std::vector<int> codes(opt.configs.size(), 0);
    for (size_t base = 0; base < opt.configs.size();
         base += static_cast<size_t>(opt.jobs)) {
        const size_t end =
            std::min(opt.configs.size(), base + static_cast<size_t>(opt.jobs));
        std::vector<std::future<int>> batch;
        for (size_t i = base; i < end; ++i)
            batch.push_back(std::async(std::launch::async, [&, i] {
                return msf::cli::run_scenario(command, opt.configs[i], run_opts);
            }));
        for (size_t i = base; i < end; ++i) codes[i] = batch[i - base].get();
    }
    for (int c : codes)
        if (c != 0) return c;
    return 0;
}
