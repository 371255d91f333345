#include "msf/moments.hpp"

#include <cmath>

#include "msf/errors.hpp"
#include "msf/poly.hpp"

namespace msf::moments {

Eigen::MatrixXd MomentSequence::hankel() const {
    const int ord = order();
    if (ord < 0 || ord % 2 != 0)
        throw ConfigError("Hankel matrix needs an even-order moment sequence");
    const int n = ord / 2;
    Eigen::MatrixXd h(n + 1, n + 1);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) h(i, j) = sigma[static_cast<size_t>(i + j)];
    return h;
}

double MomentSequence::smallest_hankel_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hankel(),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool MomentSequence::hankel_pd(double tol) const {
    const Eigen::MatrixXd h = hankel();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, h.diagonal().maxCoeff());
    return es.eigenvalues().minCoeff() > tol * scale;
}

std::vector<double> MomentSequence::central() const {
    const int ord = order();
    const double m = sigma[1];
    std::vector<double> mu(static_cast<size_t>(ord) + 1, 0.0);
    for (int k = 0; k <= ord; ++k) {
        double acc = 0.0, mp = 1.0;
        // sum_j C(k,j) sigma_j (-m)^{k-j}, accumulated from j=k downwards.
        for (int j = k; j >= 0; --j) {
            acc += poly::binomial(k, j) * sigma[static_cast<size_t>(j)] * mp;
            mp *= -m;
        }
        mu[static_cast<size_t>(k)] = acc;
    }
    return mu;
}

MomentSequence time_update(const MomentSequence& posterior, double f,
                           const std::vector<double>& noise_moments) {
    const int ord = posterior.order();
    if (static_cast<int>(noise_moments.size()) < ord + 1)
        throw ConfigError("process-noise moments shorter than the state order");
    std::vector<double> out(static_cast<size_t>(ord) + 1, 0.0);
    for (int k = 0; k <= ord; ++k) {
        double acc = 0.0, fj = 1.0;  // fj = f^j with 0^0 = 1
        for (int j = 0; j <= k; ++j) {
            acc += poly::binomial(k, j) * fj * posterior[j] *
                   noise_moments[static_cast<size_t>(k - j)];
            fj *= f;
        }
        out[static_cast<size_t>(k)] = acc;
    }
    return MomentSequence(std::move(out));
}

MeasurementUpdate measurement_update_moments(
    const DensityModel& pred, const DensityModel& noise, double y, double h,
    int order, const quadrature::QuadratureConfig& qcfg) {
    auto [lo, hi] = densities::mass_window(pred, 1e-12, qcfg);
    std::vector<double> seeds;
    if (h != 0.0) {
        // Likelihood structure in x-space: centred at y/h.
        const auto nw = densities::mass_window(noise, 1e-9, qcfg);
        const double spread = 0.5 * (nw.second - nw.first) / std::fabs(h);
        const double centre = y / h;
        seeds = {centre - spread, centre, centre + spread};
    }
    auto fn = [&](double x, double* out) {
        double acc = densities::pdf(noise, y - h * x) * densities::pdf(pred, x);
        for (int k = 0; k <= order; ++k) {
            out[k] = acc;
            acc *= x;
        }
    };
    const auto res = quadrature::integrate(fn, order + 1, lo, hi, qcfg, seeds);
    const double normalizer = res.values[0];
    if (!(normalizer > 1e-300))
        throw DegenerateObservationError(
            "measurement update normalizer underflowed");
    std::vector<double> sig(static_cast<size_t>(order) + 1);
    for (int k = 0; k <= order; ++k) sig[static_cast<size_t>(k)] = res.values[k] / normalizer;
    return {MomentSequence(std::move(sig)), normalizer};
}

}  // namespace msf::moments
