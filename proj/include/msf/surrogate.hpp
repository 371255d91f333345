#pragma once

#include <Eigen/Dense>
#include <vector>

#include "msf/densities.hpp"
#include "msf/moments.hpp"
#include "msf/quadrature.hpp"

namespace msf::surrogate {

using densities::DensityModel;
using moments::MomentSequence;

using LambdaCoefficients = std::vector<double>;

// Find q(x) = sum_k lambda_k x^k, positive on R, such that rho = prior/q
// matches the target power moments. Equivalent to minimizing the strictly
// convex dual J(lambda) = lambda.sigma - int prior*log(q).
struct SurrogateProblem {
    DensityModel prior;
    MomentSequence target;  // even order 2n, Hankel PD
};

struct SolverConfig {
    double grad_tol = 1e-9;    // convergence: max_k |g_k| / max(1,|sigma_k|)
    double accept_tol = 1e-6;  // stalled solves above this residual throw
    int max_iterations = 200;
    int max_damping_steps = 40;
    double damping_grow = 10.0;
    double damping_shrink = 3.0;
    double damping_floor = 1e-8;
    double jitter = 1e-12;  // relative diagonal jitter on the Newton system
};

enum class SolveStatus { Converged, Stalled };

struct SurrogateResult {
    LambdaCoefficients lambda;  // ascending, original x coordinates
    double log_norm = 0.0;      // log int prior/q (vanishes at the optimum)
    SolveStatus status = SolveStatus::Converged;
    double residual = 0.0;  // final relative moment error
    int iterations = 0;
};

// Damped Newton on the dual with Levenberg-Marquardt style damping:
// (H + mu*diag(H)) delta = g, mu grown on rejected steps and shrunk on
// accepted ones. A step is accepted only if the iterate stays inside the
// positivity cone and decreases J. Plain backtracking alone can jam: a Newton
// direction may dig a far-tail dip in q where the prior weight is ~0, which J
// cannot see but the cone boundary blocks. Internally the problem is solved
// in standardized coordinates u = (x - sigma_1)/sqrt(var) and mapped back.
// Throws SolverError when the final residual exceeds cfg.accept_tol.
SurrogateResult solve(const SurrogateProblem& problem,
                      const quadrature::QuadratureConfig& qcfg = {},
                      const SolverConfig& cfg = {});

// True iff q = sum lambda_k x^k is strictly positive on the whole line:
// positive leading coefficient and positive values at all real critical
// points (checked on a magnitude-balanced rescaling of the polynomial).
bool certify_positive(const LambdaCoefficients& lambda);

// Package a solve result as an evaluable density.
DensityModel make_density(const DensityModel& prior, const SurrogateResult& r);

// Dual objective and analytic derivatives in the given coordinates (no
// internal standardization); exposed so derivative correctness is testable
// against finite differences.
double dual_value(const DensityModel& prior, const MomentSequence& target,
                  const LambdaCoefficients& lambda,
                  const quadrature::QuadratureConfig& qcfg = {});
std::vector<double> dual_gradient(const DensityModel& prior,
                                  const MomentSequence& target,
                                  const LambdaCoefficients& lambda,
                                  const quadrature::QuadratureConfig& qcfg = {});
Eigen::MatrixXd dual_hessian(const DensityModel& prior,
                             const MomentSequence& target,
                             const LambdaCoefficients& lambda,
                             const quadrature::QuadratureConfig& qcfg = {});

}  // namespace msf::surrogate
