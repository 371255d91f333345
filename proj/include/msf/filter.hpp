#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "msf/densities.hpp"
#include "msf/moments.hpp"
#include "msf/quadrature.hpp"
#include "msf/surrogate.hpp"

namespace msf::filter {

using densities::DensityModel;
using densities::DiscreteNoise;
using moments::MomentSequence;

using ProcessNoise = std::variant<DensityModel, DiscreteNoise>;

// Scalar linear system x_{t+1} = f_t x_t + eta_t, y_t = h_t x_t + eps_t.
// Each sequence holds either one entry (time-invariant, broadcast to every
// step) or at least `horizon` entries.
struct SystemModel {
    std::vector<double> f;
    std::vector<double> h;
    std::vector<ProcessNoise> process_noise;
    std::vector<DensityModel> obs_noise;
    int horizon = 0;

    double f_at(int t) const;
    double h_at(int t) const;
    const ProcessNoise& process_noise_at(int t) const;
    const DensityModel& obs_noise_at(int t) const;
};

struct FilterConfig {
    int order = 4;          // surrogate order 2n
    double prior_c = 3.0;   // prior variance inflation
    bool heavy_tail_prior = false;
    double heavy_tail_scale = 5.0;  // Cauchy prior scale in heavy-tail mode
    surrogate::SolverConfig solver;
    quadrature::QuadratureConfig quad;
};

struct StepDiagnostics {
    double normalizer = 0.0;  // measurement-update normalizing constant
    bool refit = false;       // false when the f=0 shortcut skipped the solve
    int solver_iterations = 0;
    double solver_residual = 0.0;
    surrogate::SolveStatus solver_status = surrogate::SolveStatus::Converged;
};

struct FilterState {
    int t = 0;
    DensityModel prediction;           // density of x_t given y_0..y_{t-1}
    MomentSequence pred_moments;       // its power moments, sigma_0 = 1
    std::optional<MomentSequence> posterior_moments;  // of x_{t-1} given y_{t-1}
    StepDiagnostics diag;
};

// Prior for the surrogate refit: Gaussian centered on the predicted mean
// with variance inflated c-fold over the predicted variance (c > 1 so the
// prior is wider than the target and its tails dominate).
DensityModel choose_prior(const MomentSequence& pred_moments, double c);

// Heavy-tail variant: Cauchy at the predicted mean with a caller-chosen
// scale, for targets whose higher moments are not trusted.
DensityModel choose_prior_heavy(const MomentSequence& pred_moments,
                                double scale);

// Time-0 state from either an explicit density or a bare moment sequence
// (the latter is realized as a surrogate fit with an auto-chosen prior).
FilterState init_state(const DensityModel& init, const FilterConfig& cfg);
FilterState init_state(const MomentSequence& init, const FilterConfig& cfg);

// One filter cycle at time t = state.t: condition the current prediction on
// y, push the posterior moments through the dynamics, and refit a surrogate
// to the predicted moments. Failures are reported with the step index.
FilterState step(const FilterState& state, double y, const SystemModel& sys,
                 const FilterConfig& cfg);

// Sequential fold of step. Returns observations.size() + 1 states, the
// initial state first. on_state (optional) sees each new state as it is
// produced, so callers can interleave their own per-step bookkeeping.
std::vector<FilterState> run(
    const SystemModel& sys, const FilterState& init,
    const std::vector<double>& observations, const FilterConfig& cfg,
    const std::function<void(const FilterState&)>& on_state = {});

struct Simulation {
    std::vector<double> states;        // x_0..x_{T-1}
    std::vector<double> observations;  // y_0..y_{T-1}
};

// Draw a trajectory of sys.horizon steps. Sampling uses only the engine's
// raw bit stream, so one seed gives one byte-identical trajectory everywhere.
Simulation simulate(const SystemModel& sys, const DensityModel& x0,
                    std::uint64_t seed);

}  // namespace msf::filter
