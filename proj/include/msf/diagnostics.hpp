#pragma once

#include <optional>

#include "msf/densities.hpp"
#include "msf/moments.hpp"
#include "msf/oracle.hpp"
#include "msf/quadrature.hpp"
#include "msf/surrogate.hpp"

namespace msf::diagnostics {

using densities::DensityModel;
using moments::MomentSequence;
using oracle::GridDensity;

struct TvConfig {
    int initial_points = 2001;
    int max_refinements = 10;
    double stability_tol = 1e-4;  // stop when refining moves the sup less
    double window_eps = 1e-10;    // mass allowed outside the evaluation window
};

// V(p, q) = sup_x |F_p(x) - F_q(x)| with the CDFs built by cumulative
// trapezoid over a shared evaluation grid, which is refined (points doubled)
// until the sup is stable. Symmetric, in [0, 1].
double total_variation(const DensityModel& p, const DensityModel& q,
                       const quadrature::QuadratureConfig& qcfg = {},
                       const TvConfig& cfg = {});
double total_variation(const DensityModel& p, const GridDensity& g,
                       const quadrature::QuadratureConfig& qcfg = {},
                       const TvConfig& cfg = {});
double total_variation(const GridDensity& a, const GridDensity& b,
                       const TvConfig& cfg = {});

// -int p log p, with p log p clipped to 0 below p = 1e-300 (its limit value).
double shannon_entropy(const DensityModel& p,
                       const quadrature::QuadratureConfig& qcfg = {});

// int p log(p/q) >= 0; assumes q > 0 wherever p has mass (true for every
// density kind in this library).
double kl_divergence(const DensityModel& p, const DensityModel& q,
                     const quadrature::QuadratureConfig& qcfg = {});

struct MaxentConfig {
    double grad_tol = 1e-7;    // target relative moment residual
    double accept_tol = 1e-6;  // stalled fits above this are rejected...
    bool require_convergence = true;  // ...unless best-effort is requested
    int max_iterations = 400;
    int max_damping_steps = 40;
    double damping_grow = 10.0;
    double damping_shrink = 3.0;
    double damping_floor = 1e-8;
    double jitter = 1e-12;
    // Reject iterates whose exponent polynomial dips below this anywhere:
    // such a dip is an exp(+50) spike that quadrature may straddle silently.
    double dip_floor = -50.0;
};

struct MaxentResult {
    densities::ExpPoly density;
    surrogate::SolveStatus status = surrogate::SolveStatus::Converged;
    double residual = 0.0;  // relative moment error in standardized coords
    int iterations = 0;
};

// Entropy-maximizing density exp(-sum_i lambda_i x^i) matching the target
// moments: Newton on the convex functional int exp(-poly) + lambda.sigma,
// with the same damping scheme as the surrogate solver, run in standardized
// coordinates. The primary attempt descends at the full order from the
// Gaussian fit (order-2 multipliers, lambda_{2n} = 1e-6 for integrability);
// if it stalls, a homotopy retry walks the order up two at a time and the
// better residual wins. Non-PD targets are rejected; a stalled fit throws
// SolverError with its trace unless cfg.require_convergence is false, in
// which case the best iterate is returned with status Stalled.
//
// Caveat: not every Hankel-PD sequence admits an interior maximizer (the
// top multiplier can run to 0+ with the residual pinned above zero); such
// fits surface as Stalled with a near-zero leading coefficient, and their
// entropy still upper-bounds every density carrying the target moments up
// to the residual's contribution.
MaxentResult fit_maxent(const MomentSequence& target,
                        const quadrature::QuadratureConfig& qcfg = {},
                        const MaxentConfig& cfg = {});

struct BoundReport {
    double entropy_surrogate = 0.0;
    double entropy_maxent = 0.0;
    std::optional<double> entropy_truth;
    double bound_value = 0.0;
    std::optional<double> measured_tv;  // filled by callers that measure it
};

// B(gap) = 3*[-1 + {1 + (4/9) gap}^{1/2}]^{1/2}, the total-variation bound
// for an entropy gap H[maxent] - H[p] >= 0. Gaps in [-1e-6, 0] are treated
// as roundoff and clamped; anything more negative violates maxent optimality
// and raises ConsistencyError.
double entropy_gap_bound(double gap);

// V(surrogate, truth) <= B(surrogate) + B(truth); with no truth density the
// report bounds V(maxent, surrogate) by B(surrogate) alone.
BoundReport tv_upper_bound(const DensityModel& surrogate,
                           const DensityModel& maxent,
                           const DensityModel* truth = nullptr,
                           const quadrature::QuadratureConfig& qcfg = {});

}  // namespace msf::diagnostics
