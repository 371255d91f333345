#include "msf/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msf/errors.hpp"
#include "msf/poly.hpp"

namespace msf::surrogate {
namespace {

using densities::pdf;

// Seed points (prior bulk) for the infinite-domain quadratures.
std::vector<double> prior_seeds(const DensityModel& prior) {
    auto [lo, hi] = densities::mass_window(prior, 1e-6);
    const double mid = 0.5 * (lo + hi), half = 0.25 * (hi - lo);
    return {mid - half, mid, mid + half};
}

// One shared standardized view of the problem: theta'(u) = s*theta(s*u + m)
// against scaled central moments sigma'_k = mu_k / s^k.
struct Standardized {
    const DensityModel* prior;
    double m = 0.0, s = 1.0;
    std::vector<double> sig;  // scaled target
    std::vector<double> seeds;

    double theta(double u) const { return s * pdf(*prior, s * u + m); }
};

double dual_value_std(const Standardized& p, const std::vector<double>& lam,
                      const quadrature::QuadratureConfig& qcfg) {
    // log q(u) without overflow: for |u| > 1 pull out u^deg and evaluate the
    // reversed polynomial at 1/u, so heavy-tailed priors sampled at extreme
    // quadrature nodes never see inf (whose log would poison theta * log q).
    const std::vector<double> rev(lam.rbegin(), lam.rend());
    const double deg = static_cast<double>(lam.size()) - 1.0;
    auto log_q = [&](double u) {
        if (std::fabs(u) <= 1.0) return std::log(poly::eval(lam, u));
        return deg * std::log(std::fabs(u)) + std::log(poly::eval(rev, 1.0 / u));
    };
    const double integral = quadrature::integrate_real_line(
        [&](double u) {
            const double th = p.theta(u);
            return th == 0.0 ? 0.0 : th * log_q(u);
        },
        qcfg, p.seeds);
    double dot = 0.0;
    for (size_t k = 0; k < lam.size(); ++k) dot += lam[k] * p.sig[k];
    return dot - integral;
}

std::vector<double> dual_gradient_std(const Standardized& p,
                                      const std::vector<double>& lam,
                                      const quadrature::QuadratureConfig& qcfg) {
    const int dim = static_cast<int>(lam.size());
    auto fn = [&](double u, double* out) {
        // Accumulate w * u^k by repeated multiplication: each intermediate is
        // itself an integrand value (finite whenever the integral converges),
        // whereas a bare u^k overflows at extreme nodes before w can tame it.
        double acc = p.theta(u) / poly::eval(lam, u);
        for (int k = 0; k < dim; ++k) {
            out[k] = acc;
            acc *= u;
        }
    };
    const auto res = quadrature::integrate_real_line(fn, dim, qcfg, p.seeds);
    std::vector<double> g(static_cast<size_t>(dim));
    for (int k = 0; k < dim; ++k) g[static_cast<size_t>(k)] = p.sig[static_cast<size_t>(k)] - res.values[static_cast<size_t>(k)];
    return g;
}

Eigen::MatrixXd dual_hessian_std(const Standardized& p,
                                 const std::vector<double>& lam,
                                 const quadrature::QuadratureConfig& qcfg) {
    // H_{jk} = int u^{j+k} theta / q^2 is Hankel: only 2*(2n)+1 distinct
    // integrals, evaluated as one vector integrand.
    const int dim = static_cast<int>(lam.size());
    const int nint = 2 * dim - 1;
    auto fn = [&](double u, double* out) {
        const double q = poly::eval(lam, u);
        double acc = p.theta(u) / (q * q);
        for (int k = 0; k < nint; ++k) {
            out[k] = acc;
            acc *= u;
        }
    };
    const auto res = quadrature::integrate_real_line(fn, nint, qcfg, p.seeds);
    Eigen::MatrixXd h(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) h(j, k) = res.values[static_cast<size_t>(j + k)];
    return h;
}

double relative_residual(const std::vector<double>& g,
                         const std::vector<double>& sig) {
    double worst = 0.0;
    for (size_t k = 0; k < g.size(); ++k)
        worst = std::max(worst, std::fabs(g[k]) / std::max(1.0, std::fabs(sig[k])));
    return worst;
}

}  // namespace

bool certify_positive(const LambdaCoefficients& lambda) {
    if (lambda.empty() || lambda.back() <= 0.0) return false;
    const int deg = static_cast<int>(lambda.size()) - 1;
    if (deg == 0) return true;
    // Balance the variable so leading and constant coefficients have
    // comparable magnitude; otherwise tiny leading terms spawn spurious huge
    // "critical points" and the certificate goes blind.
    const double alpha = std::max(
        std::pow(std::max(std::fabs(lambda[0]), 1e-300) / lambda.back(),
                 1.0 / static_cast<double>(deg)),
        1e-8);
    const std::vector<double> bal = poly::stretch(lambda, alpha);
    std::vector<double> crit = poly::root_real_parts(poly::derivative(bal));
    crit.push_back(0.0);
    for (double r : crit)
        if (poly::eval(bal, r) <= 0.0) return false;
    return true;
}

DensityModel make_density(const DensityModel& prior, const SurrogateResult& r) {
    densities::RationalSurrogate s;
    s.prior = std::make_shared<DensityModel>(prior);
    s.lambda = r.lambda;
    s.log_norm = r.log_norm;
    return DensityModel(std::move(s));
}

SurrogateResult solve(const SurrogateProblem& problem,
                      const quadrature::QuadratureConfig& qcfg,
                      const SolverConfig& cfg) {
    const int ord = problem.target.order();
    if (ord < 2 || ord % 2 != 0)
        throw ConfigError("surrogate order must be even and at least 2");
    if (!problem.target.hankel_pd())
        throw SolverError("target moment sequence is not Hankel positive definite");

    Standardized p;
    p.prior = &problem.prior;
    p.m = problem.target.mean();
    const double var = problem.target.variance();
    if (!(var > 0.0)) throw SolverError("target variance must be positive");
    p.s = std::sqrt(var);
    const std::vector<double> mu = problem.target.central();
    p.sig.resize(mu.size());
    double sk = 1.0;
    for (size_t k = 0; k < mu.size(); ++k) {
        p.sig[k] = mu[k] / sk;
        sk *= p.s;
    }
    {
        const auto xs = prior_seeds(problem.prior);
        for (double x : xs) p.seeds.push_back((x - p.m) / p.s);
    }

    // Start from q ~ 1 with a whisper of the top power: near the flat start
    // the first Newton steps behave like the prior itself, while the positive
    // leading term keeps every gradient/Hessian integral convergent even for
    // polynomial-tailed priors.
    std::vector<double> lam(static_cast<size_t>(ord) + 1, 0.0);
    lam[0] = 1.0;
    lam.back() = 1e-6;

    double J = dual_value_std(p, lam, qcfg);
    double mu_damp = 0.0;
    double residual = 1e300;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        const std::vector<double> g = dual_gradient_std(p, lam, qcfg);
        residual = relative_residual(g, p.sig);
        if (residual <= cfg.grad_tol) break;

        const Eigen::MatrixXd H = dual_hessian_std(p, lam, qcfg);
        const double diag_scale = H.diagonal().maxCoeff();
        Eigen::VectorXd gv(ord + 1);
        for (int k = 0; k <= ord; ++k) gv[k] = g[static_cast<size_t>(k)];

        bool accepted = false;
        for (int tries = 0; tries < cfg.max_damping_steps; ++tries) {
            Eigen::MatrixXd A = H;
            A.diagonal() += mu_damp * H.diagonal();
            A.diagonal().array() += cfg.jitter * diag_scale;
            const Eigen::VectorXd delta = A.ldlt().solve(gv);
            std::vector<double> trial = lam;
            for (int k = 0; k <= ord; ++k) trial[static_cast<size_t>(k)] -= delta[k];
            if (certify_positive(trial)) {
                const double Jt = dual_value_std(p, trial, qcfg);
                if (Jt < J) {
                    lam = std::move(trial);
                    J = Jt;
                    accepted = true;
                    mu_damp = mu_damp < 1e-13 ? 0.0 : mu_damp / cfg.damping_shrink;
                    break;
                }
            }
            mu_damp = std::max(cfg.damping_grow * mu_damp, cfg.damping_floor);
        }
        if (!accepted) break;  // stalled: no acceptable damped step left
    }

    SurrogateResult out;
    out.iterations = it;
    out.residual = residual;
    out.status = residual <= cfg.grad_tol ? SolveStatus::Converged
                                          : SolveStatus::Stalled;
    if (residual > cfg.accept_tol) {
        std::ostringstream msg;
        msg << "surrogate solve stalled at residual " << residual << " after "
            << it << " iterations (acceptance threshold " << cfg.accept_tol
            << ")";
        throw SolverError(msg.str());
    }

    // Map back to x coordinates: q_x(x) = q_u((x - m)/s).
    std::vector<double> lam_x = poly::stretch(lam, 1.0 / p.s);
    lam_x = poly::taylor_shift(lam_x, -p.m);
    out.lambda = std::move(lam_x);
    // int theta/q in standardized coordinates is the 0th fitted moment.
    const std::vector<double> g_final = dual_gradient_std(p, lam, qcfg);
    out.log_norm = std::log1p(-g_final[0]);
    return out;
}

double dual_value(const DensityModel& prior, const MomentSequence& target,
                  const LambdaCoefficients& lambda,
                  const quadrature::QuadratureConfig& qcfg) {
    Standardized p{&prior, 0.0, 1.0, target.sigma, prior_seeds(prior)};
    return dual_value_std(p, lambda, qcfg);
}

std::vector<double> dual_gradient(const DensityModel& prior,
                                  const MomentSequence& target,
                                  const LambdaCoefficients& lambda,
                                  const quadrature::QuadratureConfig& qcfg) {
    Standardized p{&prior, 0.0, 1.0, target.sigma, prior_seeds(prior)};
    return dual_gradient_std(p, lambda, qcfg);
}

Eigen::MatrixXd dual_hessian(const DensityModel& prior,
                             const MomentSequence& target,
                             const LambdaCoefficients& lambda,
                             const quadrature::QuadratureConfig& qcfg) {
    Standardized p{&prior, 0.0, 1.0, target.sigma, prior_seeds(prior)};
    return dual_hessian_std(p, lambda, qcfg);
}

}  // namespace msf::surrogate
