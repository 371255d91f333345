#pragma once

#include <functional>
#include <vector>

namespace msf::quadrature {

struct QuadratureConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

// Vector-valued integrand: writes dim values f_0(x)..f_{dim-1}(x) into out.
// All components share one adaptive subdivision, so families of related
// integrals (e.g. the moment integrals x^k * w(x) for k = 0..K) cost a single
// sweep over the integrand evaluations.
using VectorFn = std::function<void(double x, double* out)>;

struct QuadratureResult {
    std::vector<double> values;
    double error = 0.0;    // accumulated error estimate (max over components)
    int intervals = 0;
};

// Adaptive Gauss-Kronrod (G7/K15) on [a, b]. Deterministic: intervals are
// bisected in LIFO order with a width-proportional error budget, so results
// are bit-identical across runs. seeds lists interior points where the
// integrand has known structure (peaks, kinks); the initial partition splits
// there. Throws QuadratureError when max_intervals is exhausted.
QuadratureResult integrate(const VectorFn& f, int dim, double a, double b,
                           const QuadratureConfig& cfg = {},
                           const std::vector<double>& seeds = {});

// Integral over the whole real line via the rational substitution
// x = t/(1-t^2), dx = (1+t^2)/(1-t^2)^2 dt, t in (-1,1). Suitable for
// integrands decaying at least polynomially faster than 1/x^2.
QuadratureResult integrate_real_line(const VectorFn& f, int dim,
                                     const QuadratureConfig& cfg = {},
                                     const std::vector<double>& seeds = {});

// Scalar conveniences.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg = {},
                 const std::vector<double>& seeds = {});
double integrate_real_line(const std::function<double(double)>& f,
                           const QuadratureConfig& cfg = {},
                           const std::vector<double>& seeds = {});

}  // namespace msf::quadrature
