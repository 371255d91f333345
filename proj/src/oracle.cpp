#include "msf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msf/errors.hpp"

namespace msf::oracle {

namespace {

// Trapezoid sum of a weighted value array; shared by several routines below.
double trapezoid(const GridDensity& g, const std::vector<double>& vals) {
    double acc = 0.0;
    for (int i = 0; i < g.n(); ++i) acc += g.weight(i) * vals[i];
    return acc;
}

GridDensity like(const GridDensity& g) {
    GridDensity out;
    out.lo = g.lo;
    out.hi = g.hi;
    out.values.assign(g.values.size(), 0.0);
    return out;
}

}  // namespace

double GridDensity::trapezoid_integral() const {
    return trapezoid(*this, values);
}

void GridDensity::normalize() {
    const double mass = trapezoid_integral();
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw ConsistencyError("grid density has non-positive mass");
    for (double& v : values) v /= mass;
}

double GridDensity::interp(double x) const {
    if (x < lo || x > hi) return 0.0;
    const double h = step();
    int i = static_cast<int>((x - lo) / h);
    if (i > n() - 2) i = n() - 2;
    const double frac = (x - node(i)) / h;
    return values[i] + frac * (values[i + 1] - values[i]);
}

ToGridResult to_grid(const DensityModel& model, double lo, double hi,
                     int n_points, bool acknowledge_truncation,
                     const quadrature::QuadratureConfig& qcfg) {
    if (!(hi > lo) || n_points < 3)
        throw ConfigError("grid window must satisfy hi > lo with >= 3 points");

    ToGridResult res;
    res.grid.lo = lo;
    res.grid.hi = hi;
    res.grid.values.resize(n_points);
    for (int i = 0; i < n_points; ++i)
        res.grid.values[i] = densities::pdf(model, res.grid.node(i));

    // Measure how much mass the window cuts off, by quadrature rather than
    // the grid sum so the report is meaningful even for coarse grids. Seed
    // the partition at the sampled mode.
    int peak = 0;
    for (int i = 1; i < n_points; ++i)
        if (res.grid.values[i] > res.grid.values[peak]) peak = i;
    const double inside = quadrature::integrate(
        [&](double x) { return densities::pdf(model, x); }, lo, hi, qcfg,
        {res.grid.node(peak)});
    res.truncated_mass = std::max(0.0, 1.0 - inside);
    if (res.truncated_mass > 1e-8 && !acknowledge_truncation) {
        std::ostringstream msg;
        msg << "window [" << lo << ", " << hi << "] truncates "
            << res.truncated_mass << " of the probability mass";
        throw WindowError(msg.str());
    }

    res.grid.normalize();
    return res;
}

GridDensity grid_measurement_update(const GridDensity& g,
                                    const DensityModel& noise, double y,
                                    double h) {
    GridDensity out = like(g);
    for (int i = 0; i < g.n(); ++i)
        out.values[i] = g.values[i] * densities::pdf(noise, y - h * g.node(i));
    const double mass = out.trapezoid_integral();
    if (!(mass > 1e-300) || !std::isfinite(mass))
        throw DegenerateObservationError(
            "observation likelihood annihilates the grid density");
    for (double& v : out.values) v /= mass;
    return out;
}

namespace {

GridDensity time_update_discrete(const GridDensity& g, const DiscreteNoise& noise,
                                 double f, double max_leak, bool parallel) {
    if (f == 0.0)
        throw ConfigError("grid prediction needs f != 0 for discrete noise");
    GridDensity out = like(g);
    const int n = g.n();
    const int na = static_cast<int>(noise.atoms.size());
    const double inv_f = 1.0 / std::abs(f);
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        const double x = g.node(i);
        double acc = 0.0;
        for (int a = 0; a < na; ++a)
            acc += noise.probabilities[a] * inv_f *
                   g.interp((x - noise.atoms[a]) / f);
        out.values[i] = acc;
    }
    const double kept = out.trapezoid_integral();
    if (1.0 - kept > max_leak) {
        std::ostringstream msg;
        msg << "prediction pushes " << 1.0 - kept
            << " of the probability mass outside the grid window";
        throw WindowError(msg.str());
    }
    out.normalize();
    return out;
}

}  // namespace

GridDensity grid_time_update(const GridDensity& g,
                             const std::variant<DensityModel, DiscreteNoise>& noise,
                             double f, double max_leak) {
    if (const auto* atoms = std::get_if<DiscreteNoise>(&noise))
        return time_update_discrete(g, *atoms, f, max_leak, true);
    const auto& density = std::get<DensityModel>(noise);

    const int n = g.n();
    // Hoist the trapezoid weights out of the O(n^2) loop.
    std::vector<double> weighted(n);
    for (int j = 0; j < n; ++j) weighted[j] = g.weight(j) * g.values[j];

    GridDensity out = like(g);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double x = g.node(i);
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += weighted[j] * densities::pdf(density, x - f * g.node(j));
        out.values[i] = acc;
    }

    const double kept = out.trapezoid_integral();
    if (1.0 - kept > max_leak) {
        std::ostringstream msg;
        msg << "prediction pushes " << 1.0 - kept
            << " of the probability mass outside the grid window";
        throw WindowError(msg.str());
    }
    out.normalize();
    return out;
}

GridDensity grid_time_update_serial(
    const GridDensity& g, const std::variant<DensityModel, DiscreteNoise>& noise,
    double f, double max_leak) {
    if (const auto* atoms = std::get_if<DiscreteNoise>(&noise))
        return time_update_discrete(g, *atoms, f, max_leak, false);
    const auto& density = std::get<DensityModel>(noise);

    // Textbook form of the convolution, kept as the reference the parallel
    // kernel is checked and benchmarked against.
    GridDensity out = like(g);
    for (int i = 0; i < g.n(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.n(); ++j)
            acc += g.weight(j) * g.values[j] *
                   densities::pdf(density, g.node(i) - f * g.node(j));
        out.values[i] = acc;
    }

    const double kept = out.trapezoid_integral();
    if (1.0 - kept > max_leak) {
        std::ostringstream msg;
        msg << "prediction pushes " << 1.0 - kept
            << " of the probability mass outside the grid window";
        throw WindowError(msg.str());
    }
    out.normalize();
    return out;
}

moments::MomentSequence grid_moments(const GridDensity& g, int order) {
    std::vector<double> sums(order + 1, 0.0);
    for (int i = 0; i < g.n(); ++i) {
        const double wv = g.weight(i) * g.values[i];
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            sums[k] += wv * p;
            p *= g.node(i);
        }
    }
    // Divide out the (near-unit) grid mass so sigma_0 is exactly 1.
    moments::MomentSequence seq;
    seq.sigma.resize(order + 1);
    for (int k = 0; k <= order; ++k) seq.sigma[k] = sums[k] / sums[0];
    return seq;
}

}  // namespace msf::oracle
