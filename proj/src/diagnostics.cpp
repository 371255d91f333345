#include "msf/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "msf/errors.hpp"
#include "msf/poly.hpp"

namespace msf::diagnostics {

namespace {

using Evaluator = std::function<double(double)>;

double tv_sup(const Evaluator& p, const Evaluator& q, double lo, double hi,
              int n) {
    const double h = (hi - lo) / (n - 1);
    double cum = 0.0;
    double sup = 0.0;
    double prev = p(lo) - q(lo);
    for (int i = 1; i < n; ++i) {
        const double d = p(lo + h * i) - q(lo + h * i);
        cum += 0.5 * h * (prev + d);
        prev = d;
        sup = std::max(sup, std::abs(cum));
    }
    return sup;
}

double tv_refine(const Evaluator& p, const Evaluator& q, double lo, double hi,
                 const TvConfig& cfg) {
    int n = cfg.initial_points;
    double sup = tv_sup(p, q, lo, hi, n);
    for (int r = 0; r < cfg.max_refinements; ++r) {
        n = 2 * n - 1;
        const double next = tv_sup(p, q, lo, hi, n);
        const bool stable = std::abs(next - sup) < cfg.stability_tol;
        sup = next;
        if (stable) break;
    }
    return sup;
}

}  // namespace

double total_variation(const DensityModel& p, const DensityModel& q,
                       const quadrature::QuadratureConfig& qcfg,
                       const TvConfig& cfg) {
    const auto wp = densities::mass_window(p, cfg.window_eps, qcfg);
    const auto wq = densities::mass_window(q, cfg.window_eps, qcfg);
    return tv_refine([&](double x) { return densities::pdf(p, x); },
                     [&](double x) { return densities::pdf(q, x); },
                     std::min(wp.first, wq.first), std::max(wp.second, wq.second),
                     cfg);
}

double total_variation(const DensityModel& p, const GridDensity& g,
                       const quadrature::QuadratureConfig& qcfg,
                       const TvConfig& cfg) {
    const auto wp = densities::mass_window(p, cfg.window_eps, qcfg);
    return tv_refine([&](double x) { return densities::pdf(p, x); },
                     [&](double x) { return g.interp(x); },
                     std::min(wp.first, g.lo), std::max(wp.second, g.hi), cfg);
}

double total_variation(const GridDensity& a, const GridDensity& b,
                       const TvConfig& cfg) {
    return tv_refine([&](double x) { return a.interp(x); },
                     [&](double x) { return b.interp(x); },
                     std::min(a.lo, b.lo), std::max(a.hi, b.hi), cfg);
}

double shannon_entropy(const DensityModel& p,
                       const quadrature::QuadratureConfig& qcfg) {
    const auto w = densities::mass_window(p, 1e-9, qcfg);
    return quadrature::integrate_real_line(
        [&](double x) {
            const double v = densities::pdf(p, x);
            return v > 1e-300 ? -v * std::log(v) : 0.0;
        },
        qcfg, {w.first, 0.5 * (w.first + w.second), w.second});
}

double kl_divergence(const DensityModel& p, const DensityModel& q,
                     const quadrature::QuadratureConfig& qcfg) {
    const auto w = densities::mass_window(p, 1e-9, qcfg);
    return quadrature::integrate_real_line(
        [&](double x) {
            const double vp = densities::pdf(p, x);
            if (vp <= 1e-300) return 0.0;
            const double vq = std::max(densities::pdf(q, x), 1e-300);
            return vp * (std::log(vp) - std::log(vq));
        },
        qcfg, {w.first, 0.5 * (w.first + w.second), w.second});
}

namespace {

// Exponent-polynomial critical points, used both to seed the quadrature
// partition (exp(-poly) is extremal there) and to find the deepest dip.
std::vector<double> exponent_critical_points(const std::vector<double>& lam) {
    std::vector<double> pts = poly::root_real_parts(poly::derivative(lam));
    pts.push_back(0.0);
    return pts;
}

// Max over x of the exponent -poly(x); with a positive leading coefficient
// the max sits at a real critical point, all of which are inspected.
double exponent_peak(const std::vector<double>& lam) {
    double peak = -poly::eval(lam, 0.0);
    for (double r : exponent_critical_points(lam))
        peak = std::max(peak, -poly::eval(lam, r));
    return peak;
}

// Moment integrals I_k = int u^k exp(-poly(u)) du for k = 0..2*order; one
// vector quadrature shared by the value, gradient and Hessian.
std::vector<double> exppoly_moments(const std::vector<double>& lam, int order,
                                    const quadrature::QuadratureConfig& qcfg) {
    const int dim = 2 * order + 1;
    auto fn = [&](double u, double* out) {
        double acc = std::exp(-poly::eval(lam, u));
        for (int k = 0; k < dim; ++k) {
            out[k] = acc;
            acc *= u;
        }
    };
    return quadrature::integrate_real_line(fn, dim, qcfg,
                                           exponent_critical_points(lam))
        .values;
}

double maxent_objective(const std::vector<double>& lam,
                        const std::vector<double>& sigma, double mass) {
    double acc = mass;
    for (size_t i = 0; i < lam.size(); ++i) acc += lam[i] * sigma[i];
    return acc;
}

}  // namespace

MaxentResult fit_maxent(const MomentSequence& target,
                        const quadrature::QuadratureConfig& qcfg,
                        const MaxentConfig& cfg) {
    const int order = target.order();
    if (order < 2 || order % 2 != 0)
        throw ConfigError("maxent target order must be even and >= 2");
    if (!target.hankel_pd())
        throw ConfigError("maxent target moments are not positive definite");

    // Standardized coordinates u = (x - m)/s: the target becomes zero-mean,
    // unit-variance, and the Gaussian initializer is the same every time.
    const double m = target.mean();
    const double s = std::sqrt(target.variance());
    const std::vector<double> mu = target.central();
    std::vector<double> sig(order + 1);
    double sk = 1.0;
    for (int k = 0; k <= order; ++k) {
        sig[k] = mu[k] / sk;
        sk *= s;
    }

    // One damped-Newton descent over a sequence of orders. Each entry in
    // `stages` widens lambda to that order (zero padding plus a whisper of
    // the new top power) and descends on the moments up to it.
    struct Path {
        std::vector<double> lam;
        std::vector<double> mom;
        double value = 0.0;
        double mu_damp = 0.0;
        double residual = std::numeric_limits<double>::infinity();
        int iter = 0;
    };
    auto run_stages = [&](const std::vector<int>& stages) {
        Path p;
        p.lam = {0.5 * std::log(2.0 * M_PI), 0.0, 0.5};
        std::vector<double>& lam = p.lam;
        std::vector<double>& mom = p.mom;
        double& value = p.value;
        double& mu_damp = p.mu_damp;
        double& residual = p.residual;
        int& iter = p.iter;
        for (int stage : stages) {
            while (static_cast<int>(lam.size()) < stage + 1) lam.push_back(0.0);
            if (stage > 2 && lam.back() == 0.0) lam.back() = 1e-6;
            mom = exppoly_moments(lam, stage, qcfg);
            value = maxent_objective(lam, sig, mom[0]);
            mu_damp = 0.0;
            for (int step = 0; step < cfg.max_iterations; ++step, ++iter) {
                Eigen::VectorXd g(stage + 1);
                for (int k = 0; k <= stage; ++k) g(k) = sig[k] - mom[k];
                residual = 0.0;
                for (int k = 0; k <= stage; ++k)
                    residual = std::max(
                        residual, std::abs(g(k)) / std::max(1.0, std::abs(sig[k])));
                if (residual <= cfg.grad_tol) break;

                Eigen::MatrixXd H(stage + 1, stage + 1);
                for (int j = 0; j <= stage; ++j)
                    for (int k = 0; k <= stage; ++k) H(j, k) = mom[j + k];
                const double max_diag = H.diagonal().maxCoeff();

                bool accepted = false;
                for (int d = 0; d < cfg.max_damping_steps; ++d) {
                    Eigen::MatrixXd A = H;
                    A.diagonal() += mu_damp * H.diagonal();
                    A.diagonal().array() += cfg.jitter * max_diag;
                    const Eigen::VectorXd delta = A.ldlt().solve(g);

                    std::vector<double> trial = lam;
                    for (int k = 0; k <= stage; ++k) trial[k] -= delta(k);

                    // A trial must keep exp(-poly) integrable and dip-free
                    // before it is worth integrating at all; a trial that
                    // defeats the quadrature budget is rejected like any
                    // other bad step.
                    if (trial.back() > 0.0 &&
                        exponent_peak(trial) < -cfg.dip_floor) {
                        std::vector<double> trial_mom;
                        bool integrable = true;
                        try {
                            trial_mom = exppoly_moments(trial, stage, qcfg);
                        } catch (const QuadratureError&) {
                            integrable = false;
                        }
                        const double trial_value =
                            integrable
                                ? maxent_objective(trial, sig, trial_mom[0])
                                : value;
                        // Near the optimum the objective decrease drops below
                        // the quadrature noise floor; fall back to accepting
                        // steps that strictly reduce the moment residual
                        // without raising the objective beyond that noise.
                        bool accept = false;
                        if (integrable) {
                            if (trial_value < value) {
                                accept = true;
                            } else if (trial_value <
                                       value +
                                           1e-10 * std::max(1.0, std::abs(value))) {
                                double trial_res = 0.0;
                                for (int k = 0; k <= stage; ++k)
                                    trial_res = std::max(
                                        trial_res,
                                        std::abs(sig[k] - trial_mom[k]) /
                                            std::max(1.0, std::abs(sig[k])));
                                accept = trial_res < residual;
                            }
                        }
                        if (accept) {
                            lam = std::move(trial);
                            mom = std::move(trial_mom);
                            value = trial_value;
                            accepted = true;
                            mu_damp /= cfg.damping_shrink;
                            if (mu_damp < 1e-13) mu_damp = 0.0;
                            break;
                        }
                    }
                    mu_damp =
                        std::max(cfg.damping_floor, mu_damp * cfg.damping_grow);
                }
                if (!accepted) break;  // damping exhausted at this stage
            }
        }
        return p;
    };

    // A single descent at the full order converges on most targets and is
    // kept as the primary attempt. When it stalls, retry as a homotopy
    // walking the order up two at a time -- each stage then starts close to
    // its own optimum, which rescues badly conditioned high-order fits --
    // and keep whichever attempt drove the residual further down.
    Path best = run_stages({order});
    int total_iter = best.iter;
    if (best.residual > cfg.grad_tol && order > 2) {
        std::vector<int> walk;
        for (int k = 2; k <= order; k += 2) walk.push_back(k);
        Path retry = run_stages(walk);
        total_iter += retry.iter;
        if (retry.residual < best.residual) best = std::move(retry);
    }

    const bool converged = best.residual <= cfg.grad_tol;
    if (!converged && best.residual > cfg.accept_tol && cfg.require_convergence) {
        std::ostringstream msg;
        msg << "maxent fit stalled: residual " << best.residual << " after "
            << total_iter << " iterations (damping " << best.mu_damp
            << ", objective " << best.value << ")";
        throw SolverError(msg.str());
    }

    // Map back to x: poly_u((x - m)/s), with log(s) folded into the constant
    // for the 1/s density Jacobian.
    std::vector<double> lam_x =
        poly::taylor_shift(poly::stretch(best.lam, 1.0 / s), -m);
    lam_x[0] += std::log(s);

    MaxentResult res;
    res.density = densities::ExpPoly{std::move(lam_x)};
    res.status = (converged || best.residual <= cfg.accept_tol)
                     ? surrogate::SolveStatus::Converged
                     : surrogate::SolveStatus::Stalled;
    res.residual = best.residual;
    res.iterations = total_iter;
    return res;
}

double entropy_gap_bound(double gap) {
    if (gap < -1e-6)
        throw ConsistencyError(
            "entropy gap below maxent entropy by more than roundoff");
    if (gap < 0.0) gap = 0.0;
    return 3.0 * std::sqrt(-1.0 + std::sqrt(1.0 + (4.0 / 9.0) * gap));
}

BoundReport tv_upper_bound(const DensityModel& surrogate,
                           const DensityModel& maxent,
                           const DensityModel* truth,
                           const quadrature::QuadratureConfig& qcfg) {
    BoundReport rep;
    rep.entropy_surrogate = shannon_entropy(surrogate, qcfg);
    rep.entropy_maxent = shannon_entropy(maxent, qcfg);
    rep.bound_value = entropy_gap_bound(rep.entropy_maxent - rep.entropy_surrogate);
    if (truth) {
        rep.entropy_truth = shannon_entropy(*truth, qcfg);
        rep.bound_value += entropy_gap_bound(rep.entropy_maxent - *rep.entropy_truth);
    }
    return rep;
}

}  // namespace msf::diagnostics
