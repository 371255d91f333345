#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msf/densities.hpp"
#include "msf/diagnostics.hpp"
#include "msf/filter.hpp"
#include "msf/moments.hpp"
#include "msf/quadrature.hpp"
#include "msf/surrogate.hpp"

namespace msf::cli {

// A fit/bound scenario: one target (density or bare moments), one prior.
struct FitScenario {
    std::optional<densities::DensityModel> truth;  // absent for bare moments
    moments::MomentSequence target;                // resolved target moments
    std::optional<densities::DensityModel> explicit_prior;  // else auto
    double prior_c = 3.0;
    bool heavy_tail_prior = false;
    double heavy_tail_scale = 5.0;
    std::optional<double> truncation_radius;  // heavy-tail moment escape hatch
    int density_points = 2001;                // density.csv resolution
};

struct OracleOptions {
    int points = 4001;
    std::optional<std::pair<double, double>> window;  // else auto-sized
    double half_width_sds = 12.0;                     // auto window half-width
    double max_leak = 1e-6;
};

// A filter/compare scenario.
struct FilterScenario {
    filter::SystemModel system;
    std::optional<densities::DensityModel> init_density;
    std::optional<moments::MomentSequence> init_moments;
    std::optional<std::vector<double>> observations;  // replay; else simulate
    filter::FilterConfig filter_cfg;
    OracleOptions oracle;
};

// One parsed scenario config file.
struct Scenario {
    std::string name;
    std::optional<std::string> mode;  // optional in the file; must match cmd
    int order = 4;
    std::uint64_t seed = 0;
    std::optional<std::string> output_dir;
    quadrature::QuadratureConfig quad;
    surrogate::SolverConfig solver;
    diagnostics::MaxentConfig maxent;
    diagnostics::TvConfig tv;
    std::optional<FitScenario> fit;
    std::optional<FilterScenario> filter;
};

// Parse and validate a config file. Structural violations raise ConfigError
// with the offending key path; JSON syntax errors keep the parser's
// line/column message.
Scenario load_scenario(const std::filesystem::path& config_path);

struct RunOptions {
    // Output root; scenario files land in <root>/<name>/. When unset the
    // config's output_dir (or "out") is used.
    std::optional<std::filesystem::path> out_dir;
    bool oracle = false;
    bool plot_data = false;
    std::optional<std::uint64_t> seed_override;
};

// Execute one scenario under the given subcommand ("fit", "filter", "bound",
// "compare"). Writes outputs under opts.out_dir/<name>/ and returns the
// process exit code (0 on success).
int run_scenario(const std::string& command,
                 const std::filesystem::path& config_path,
                 const RunOptions& opts);

}  // namespace msf::cli
