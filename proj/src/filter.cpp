#include "msf/filter.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "msf/errors.hpp"

namespace msf::filter {

namespace {

template <typename T>
const T& broadcast_at(const std::vector<T>& seq, int t, const char* name) {
    if (seq.empty()) {
        std::ostringstream msg;
        msg << "system model is missing the " << name << " sequence";
        throw ConfigError(msg.str());
    }
    if (seq.size() == 1) return seq[0];
    if (t < 0 || t >= static_cast<int>(seq.size())) {
        std::ostringstream msg;
        msg << name << " sequence has no entry for step " << t;
        throw ConfigError(msg.str());
    }
    return seq[t];
}

std::vector<double> process_noise_moments(const ProcessNoise& noise, int order,
                                          const quadrature::QuadratureConfig& qcfg) {
    if (const auto* atoms = std::get_if<DiscreteNoise>(&noise))
        return atoms->moments(order);
    return densities::moments(std::get<DensityModel>(noise), order, qcfg);
}

// Rethrow the in-flight exception with the step index prepended, keeping its
// type (the CLI maps types to exit codes). Unlisted types pass through.
[[noreturn]] void rethrow_with_step(int t) {
    std::ostringstream p;
    p << "step " << t << ": ";
    try {
        throw;
    } catch (const SolverError& e) {
        throw SolverError(p.str() + e.what());
    } catch (const DegenerateObservationError& e) {
        throw DegenerateObservationError(p.str() + e.what());
    } catch (const QuadratureError& e) {
        throw QuadratureError(p.str() + e.what());
    } catch (const WindowError& e) {
        throw WindowError(p.str() + e.what());
    } catch (const ConsistencyError& e) {
        throw ConsistencyError(p.str() + e.what());
    }
}

}  // namespace

double SystemModel::f_at(int t) const { return broadcast_at(f, t, "f"); }
double SystemModel::h_at(int t) const { return broadcast_at(h, t, "h"); }
const ProcessNoise& SystemModel::process_noise_at(int t) const {
    return broadcast_at(process_noise, t, "process_noise");
}
const DensityModel& SystemModel::obs_noise_at(int t) const {
    return broadcast_at(obs_noise, t, "obs_noise");
}

DensityModel choose_prior(const MomentSequence& pred_moments, double c) {
    if (!(c > 1.0)) throw ConfigError("prior inflation c must exceed 1");
    const double var = pred_moments.variance();
    if (!(var > 1e-12))
        throw ConfigError(
            "predicted moments admit no positive variance for the prior");
    return densities::Gaussian{pred_moments.mean(), std::sqrt(c * var)};
}

DensityModel choose_prior_heavy(const MomentSequence& pred_moments,
                                double scale) {
    if (!(scale > 0.0)) throw ConfigError("heavy-tail prior scale must be > 0");
    return densities::Cauchy{pred_moments.mean(), scale};
}

namespace {

DensityModel make_prior(const MomentSequence& pred, const FilterConfig& cfg) {
    return cfg.heavy_tail_prior ? choose_prior_heavy(pred, cfg.heavy_tail_scale)
                                : choose_prior(pred, cfg.prior_c);
}

void check_order(const FilterConfig& cfg) {
    if (cfg.order < 2 || cfg.order % 2 != 0 || cfg.order > 16)
        throw ConfigError("filter order must be even, between 2 and 16");
}

}  // namespace

FilterState init_state(const DensityModel& init, const FilterConfig& cfg) {
    check_order(cfg);
    FilterState st{0, init, MomentSequence{}, std::nullopt, {}};
    st.pred_moments =
        MomentSequence{densities::moments(init, cfg.order, cfg.quad)};
    if (!st.pred_moments.hankel_pd())
        throw ConfigError("initial density yields a non-PD moment sequence");
    return st;
}

FilterState init_state(const MomentSequence& init, const FilterConfig& cfg) {
    check_order(cfg);
    if (init.order() != cfg.order)
        throw ConfigError("initial moment sequence order differs from config");
    if (!init.hankel_pd())
        throw ConfigError("initial moment sequence is not positive definite");

    const DensityModel prior = make_prior(init, cfg);
    const auto fit =
        surrogate::solve({prior, init}, cfg.quad, cfg.solver);
    FilterState st{0, surrogate::make_density(prior, fit), init, std::nullopt, {}};
    st.diag.refit = true;
    st.diag.solver_iterations = fit.iterations;
    st.diag.solver_residual = fit.residual;
    st.diag.solver_status = fit.status;
    return st;
}

FilterState step(const FilterState& state, double y, const SystemModel& sys,
                 const FilterConfig& cfg) {
    try {
        const int t = state.t;
        const double f = sys.f_at(t);

        // (1) Condition the current prediction on y_t.
        const auto meas = moments::measurement_update_moments(
            state.prediction, sys.obs_noise_at(t), y, sys.h_at(t), cfg.order,
            cfg.quad);

        // (2) Push the posterior moments through x_{t+1} = f x_t + eta_t.
        const ProcessNoise& noise = sys.process_noise_at(t);
        if (f == 0.0 && std::holds_alternative<DiscreteNoise>(noise))
            throw ConfigError(
                "f = 0 with discrete noise leaves no density to predict");
        const std::vector<double> eta =
            process_noise_moments(noise, cfg.order, cfg.quad);
        MomentSequence pred = moments::time_update(meas.moments, f, eta);
        if (!pred.hankel_pd())
            throw SolverError("predicted moment sequence lost positive definiteness");

        FilterState next{t + 1, state.prediction, {}, meas.moments, {}};
        next.diag.normalizer = meas.normalizer;

        // (3) Realize the predicted moments as a density again. With f = 0
        // the state forgets its past entirely and the prediction IS the
        // process noise; no refit can improve on that.
        if (f == 0.0) {
            next.prediction = std::get<DensityModel>(noise);
        } else {
            const DensityModel prior = make_prior(pred, cfg);
            const auto fit = surrogate::solve({prior, pred}, cfg.quad, cfg.solver);
            next.prediction = surrogate::make_density(prior, fit);
            next.diag.refit = true;
            next.diag.solver_iterations = fit.iterations;
            next.diag.solver_residual = fit.residual;
            next.diag.solver_status = fit.status;
        }
        next.pred_moments = std::move(pred);
        return next;
    } catch (const ConfigError&) {
        throw;  // configuration problems are not step-indexed
    } catch (...) {
        rethrow_with_step(state.t);
    }
}

std::vector<FilterState> run(
    const SystemModel& sys, const FilterState& init,
    const std::vector<double>& observations, const FilterConfig& cfg,
    const std::function<void(const FilterState&)>& on_state) {
    if (static_cast<int>(observations.size()) > sys.horizon)
        throw ConfigError("more observations than the system horizon");

    std::vector<FilterState> states;
    states.reserve(observations.size() + 1);
    states.push_back(init);
    if (on_state) on_state(states.back());
    for (double y : observations) {
        states.push_back(step(states.back(), y, sys, cfg));
        if (on_state) on_state(states.back());
    }
    return states;
}

Simulation simulate(const SystemModel& sys, const DensityModel& x0,
                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Simulation sim;
    sim.states.reserve(sys.horizon);
    sim.observations.reserve(sys.horizon);

    double x = densities::sample(x0, rng);
    for (int t = 0; t < sys.horizon; ++t) {
        sim.states.push_back(x);
        const double eps = densities::sample(sys.obs_noise_at(t), rng);
        sim.observations.push_back(sys.h_at(t) * x + eps);
        const ProcessNoise& noise = sys.process_noise_at(t);
        const double eta = std::holds_alternative<DiscreteNoise>(noise)
                               ? densities::sample(std::get<DiscreteNoise>(noise), rng)
                               : densities::sample(std::get<DensityModel>(noise), rng);
        x = sys.f_at(t) * x + eta;
    }
    return sim;
}

}  // namespace msf::filter
