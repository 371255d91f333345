#pragma once

#include <Eigen/Dense>
#include <vector>

#include "msf/densities.hpp"
#include "msf/quadrature.hpp"

namespace msf::moments {

using densities::DensityModel;

// Raw power moments sigma_0..sigma_2n with sigma_0 = 1.
struct MomentSequence {
    std::vector<double> sigma;

    MomentSequence() = default;
    explicit MomentSequence(std::vector<double> s) : sigma(std::move(s)) {}

    int order() const { return static_cast<int>(sigma.size()) - 1; }
    double operator[](int k) const { return sigma[static_cast<size_t>(k)]; }

    double mean() const { return sigma[1]; }
    double variance() const { return sigma[2] - sigma[1] * sigma[1]; }

    // (n+1)x(n+1) Hankel matrix H(i,j) = sigma_{i+j}; requires even order 2n.
    Eigen::MatrixXd hankel() const;

    // Positive definiteness of the Hankel matrix -- the feasibility
    // certificate for the truncated moment problem. tol is relative to the
    // largest diagonal entry.
    bool hankel_pd(double tol = 1e-12) const;
    double smallest_hankel_eigenvalue() const;

    // Central moments mu_0..mu_2n about sigma_1.
    std::vector<double> central() const;
};

// sigma_{k,t+1} = sum_j C(k,j) f^j E[x^j | Y] E[eta^{k-j}]; exact algebra,
// the only assumption being independence of state and process noise.
MomentSequence time_update(const MomentSequence& posterior, double f,
                           const std::vector<double>& noise_moments);

struct MeasurementUpdate {
    MomentSequence moments;
    double normalizer = 0.0;  // integral of likelihood * prediction
};

// Posterior moments sigma_k = int x^k rho_eps(y - h x) pred(x) dx, divided
// through by the k=0 normalizer. Throws DegenerateObservationError when the
// normalizer underflows (observation incompatible with the prediction).
MeasurementUpdate measurement_update_moments(
    const DensityModel& pred, const DensityModel& noise, double y, double h,
    int order, const quadrature::QuadratureConfig& qcfg = {});

}  // namespace msf::moments
