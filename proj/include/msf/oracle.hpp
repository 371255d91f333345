#pragma once

#include <variant>
#include <vector>

#include "msf/densities.hpp"
#include "msf/moments.hpp"
#include "msf/quadrature.hpp"

namespace msf::oracle {

using densities::DensityModel;
using densities::DiscreteNoise;

// Density sampled at uniform nodes on [lo, hi], trapezoid-normalized.
struct GridDensity {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> values;

    int n() const { return static_cast<int>(values.size()); }
    double step() const { return (hi - lo) / (n() - 1); }
    double node(int i) const { return lo + step() * i; }
    double weight(int i) const {
        return (i == 0 || i == n() - 1) ? 0.5 * step() : step();
    }

    double trapezoid_integral() const;
    void normalize();  // throws ConsistencyError on non-positive mass

    // Linear interpolation, zero outside the window.
    double interp(double x) const;
};

struct ToGridResult {
    GridDensity grid;
    double truncated_mass = 0.0;
};

// Sample a density model onto a grid. Mass outside the window above 1e-8
// raises WindowError unless acknowledge_truncation is set; either way the
// measured truncated mass is reported.
ToGridResult to_grid(const DensityModel& model, double lo, double hi,
                     int n_points, bool acknowledge_truncation = false,
                     const quadrature::QuadratureConfig& qcfg = {});

// Bayes correction on the grid: values_i *= noise(y - h*x_i), renormalized.
GridDensity grid_measurement_update(const GridDensity& g,
                                    const DensityModel& noise, double y,
                                    double h);

// Prediction through x' = f*x + eta. Discrete noise: exact shifted mixture
// sum_i rho_i (1/|f|) g((x - xi_i)/f) via interpolation. Continuous noise:
// dense trapezoid convolution out_i = sum_j w_j g_j noise(x_i - f*x_j) --
// the O(N^2) kernel, OpenMP-parallel over output nodes (each node summed
// serially by one thread, so results are identical for any thread count).
// max_leak bounds the probability mass pushed outside the window.
GridDensity grid_time_update(const GridDensity& g,
                             const std::variant<DensityModel, DiscreteNoise>& noise,
                             double f, double max_leak = 1e-6);

// Serial reference implementation used by tests and the benchmark.
GridDensity grid_time_update_serial(
    const GridDensity& g, const std::variant<DensityModel, DiscreteNoise>& noise,
    double f, double max_leak = 1e-6);

// Trapezoid moments; sigma_0 = 1 by construction.
moments::MomentSequence grid_moments(const GridDensity& g, int order);

}  // namespace msf::oracle
