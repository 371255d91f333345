#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <variant>
#include <vector>

#include "msf/quadrature.hpp"

namespace msf::densities {

struct DensityModel;

struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
};

struct Laplace {
    double loc = 0.0;
    double scale = 1.0;
};

struct Cauchy {
    double loc = 0.0;
    double scale = 1.0;
};

struct StudentT {
    double dof = 1.0;
    double loc = 0.0;
    double scale = 1.0;
};

struct Mixture {
    std::vector<double> weights;          // positive, sum 1
    std::vector<DensityModel> components;
};

// rho(x) = prior(x) / q(x) / exp(log_norm), q the ascending-coefficient
// polynomial lambda, positive on the whole line.
struct RationalSurrogate {
    std::shared_ptr<const DensityModel> prior;
    std::vector<double> lambda;
    double log_norm = 0.0;
};

// rho(x) = exp(-sum_i lambda[i] x^i); lambda[0] carries the normalization.
struct ExpPoly {
    std::vector<double> lambda;
};

// Process noise that is a finite set of atoms instead of a density.
struct DiscreteNoise {
    std::vector<double> atoms;
    std::vector<double> probabilities;  // positive, sum 1 within 1e-12

    std::vector<double> moments(int order) const;
};

struct DensityModel {
    std::variant<Gaussian, Laplace, Cauchy, StudentT, Mixture,
                 RationalSurrogate, ExpPoly>
        v;

    DensityModel(Gaussian g) : v(g) {}
    DensityModel(Laplace l) : v(l) {}
    DensityModel(Cauchy c) : v(c) {}
    DensityModel(StudentT t) : v(t) {}
    DensityModel(Mixture m) : v(std::move(m)) {}
    DensityModel(RationalSurrogate r) : v(std::move(r)) {}
    DensityModel(ExpPoly e) : v(std::move(e)) {}
};

double pdf(const DensityModel& m, double x);

// Tail behaviour, used to decide which power moments exist.
enum class TailClass { SubGaussian, Exponential, Polynomial };

struct Tail {
    TailClass cls = TailClass::SubGaussian;
    // For Polynomial tails: pdf ~ |x|^-exponent, so moment k is finite iff
    // k < exponent - 1. Unused otherwise.
    double exponent = 0.0;
};

Tail tail(const DensityModel& m);

bool moment_finite(const DensityModel& m, int k);

// Raw power moments sigma_0..sigma_order. Closed forms for the analytic
// kinds; quadrature over the real line for surrogate / exp-poly densities.
// Throws ConfigError when a requested moment diverges.
std::vector<double> moments(const DensityModel& m, int order,
                            const quadrature::QuadratureConfig& qcfg = {});

// Moments of the density restricted (and renormalized) to [-radius, radius];
// the escape hatch for heavy-tailed targets whose raw moments diverge.
std::vector<double> truncated_moments(const DensityModel& m, int order,
                                      double radius,
                                      const quadrature::QuadratureConfig& qcfg = {});

// [lo, hi] containing all but at most eps of the probability mass, found by
// expanding a shape-based initial window until the enclosed mass suffices.
std::pair<double, double> mass_window(const DensityModel& m, double eps,
                                      const quadrature::QuadratureConfig& qcfg = {});

// Draw one sample. Implemented for the analytic kinds and mixtures thereof;
// samplers are hand-rolled on top of the engine's raw bits so that identical
// seeds give identical streams on every platform.
double sample(const DensityModel& m, std::mt19937_64& rng);

double sample(const DiscreteNoise& n, std::mt19937_64& rng);

// Uniform double in (0, 1), 53-bit resolution.
double uniform01(std::mt19937_64& rng);

}  // namespace msf::densities
