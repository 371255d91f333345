#include "msf/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "msf/errors.hpp"
#include "msf/poly.hpp"

namespace msf::densities {
namespace {

constexpr double kPi = std::numbers::pi;

double gaussian_pdf(const Gaussian& g, double x) {
    const double z = (x - g.mean) / g.stddev;
    return std::exp(-0.5 * z * z) / (g.stddev * std::sqrt(2.0 * kPi));
}

double laplace_pdf(const Laplace& l, double x) {
    return std::exp(-std::fabs(x - l.loc) / l.scale) / (2.0 * l.scale);
}

double cauchy_pdf(const Cauchy& c, double x) {
    const double z = (x - c.loc) / c.scale;
    return 1.0 / (kPi * c.scale * (1.0 + z * z));
}

double student_t_pdf(const StudentT& t, double x) {
    const double z = (x - t.loc) / t.scale;
    const double log_const = std::lgamma(0.5 * (t.dof + 1.0)) -
                             std::lgamma(0.5 * t.dof) -
                             0.5 * std::log(t.dof * kPi) - std::log(t.scale);
    return std::exp(log_const -
                    0.5 * (t.dof + 1.0) * std::log1p(z * z / t.dof));
}

// Exponent clamp keeps exp() finite while the maxent solver explores.
double exp_poly_pdf(const ExpPoly& e, double x) {
    const double p = poly::eval(e.lambda, x);
    return std::exp(std::clamp(-p, -745.0, 700.0));
}

std::vector<double> gaussian_moments(double mean, double stddev, int order) {
    // E[x^k] = mean*E[x^{k-1}] + (k-1)*var*E[x^{k-2}] (Stein recurrence).
    std::vector<double> m(order + 1);
    m[0] = 1.0;
    if (order >= 1) m[1] = mean;
    const double var = stddev * stddev;
    for (int k = 2; k <= order; ++k)
        m[k] = mean * m[k - 1] + (k - 1) * var * m[k - 2];
    return m;
}

std::vector<double> laplace_moments(double loc, double scale, int order) {
    // Standard Laplace: E[W^j] = j! for even j, 0 for odd.
    std::vector<double> w(order + 1, 0.0);
    w[0] = 1.0;
    for (int j = 2; j <= order; j += 2)
        w[j] = w[j - 2] * static_cast<double>(j) * static_cast<double>(j - 1);
    std::vector<double> m(order + 1, 0.0);
    for (int k = 0; k <= order; ++k)
        for (int j = 0; j <= k; ++j)
            m[k] += poly::binomial(k, j) * std::pow(loc, k - j) *
                    std::pow(scale, j) * w[j];
    return m;
}

std::vector<double> student_t_moments(const StudentT& t, int order) {
    // Standard T(dof): E[T^j] = dof^{j/2} G((j+1)/2) G((dof-j)/2) /
    // (sqrt(pi) G(dof/2)) for even j < dof, 0 for odd j < dof.
    std::vector<double> w(order + 1, 0.0);
    w[0] = 1.0;
    for (int j = 2; j <= order; j += 2)
        w[j] = std::pow(t.dof, 0.5 * j) *
               std::exp(std::lgamma(0.5 * (j + 1)) +
                        std::lgamma(0.5 * (t.dof - j)) -
                        0.5 * std::log(kPi) - std::lgamma(0.5 * t.dof));
    std::vector<double> m(order + 1, 0.0);
    for (int k = 0; k <= order; ++k)
        for (int j = 0; j <= k; ++j)
            m[k] += poly::binomial(k, j) * std::pow(t.loc, k - j) *
                    std::pow(t.scale, j) * w[j];
    return m;
}

// Crude location/spread estimates used to seed windows and quadrature.
struct Shape {
    double loc = 0.0;
    double spread = 1.0;
};

Shape shape_of(const DensityModel& m);

Shape shape_of_mixture(const Mixture& mix) {
    Shape s{0.0, 0.0};
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < mix.components.size(); ++i) {
        const Shape c = shape_of(mix.components[i]);
        lo = std::min(lo, c.loc - c.spread);
        hi = std::max(hi, c.loc + c.spread);
    }
    s.loc = 0.5 * (lo + hi);
    s.spread = std::max(0.5 * (hi - lo), 1e-12);
    return s;
}

Shape shape_of(const DensityModel& m) {
    return std::visit(
        [](const auto& alt) -> Shape {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return {alt.mean, alt.stddev};
            else if constexpr (std::is_same_v<T, Laplace>)
                return {alt.loc, alt.scale * std::sqrt(2.0)};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return {alt.loc, alt.scale};
            else if constexpr (std::is_same_v<T, StudentT>)
                return {alt.loc, alt.scale * (alt.dof > 2.0
                                                  ? std::sqrt(alt.dof / (alt.dof - 2.0))
                                                  : 2.0)};
            else if constexpr (std::is_same_v<T, Mixture>)
                return shape_of_mixture(alt);
            else if constexpr (std::is_same_v<T, RationalSurrogate>)
                return shape_of(*alt.prior);
            else {  // ExpPoly: centre on the exponent minimiser.
                Shape s{0.0, 1.0};
                const auto crit = poly::root_real_parts(poly::derivative(alt.lambda));
                double best = poly::eval(alt.lambda, 0.0), best_x = 0.0;
                for (double r : crit)
                    if (poly::eval(alt.lambda, r) < best) {
                        best = poly::eval(alt.lambda, r);
                        best_x = r;
                    }
                s.loc = best_x;
                for (double r : crit)
                    s.spread = std::max(s.spread, std::fabs(r - best_x));
                return s;
            }
        },
        m.v);
}

std::vector<double> quadrature_moments(const DensityModel& m, int order,
                                       const quadrature::QuadratureConfig& qcfg) {
    const Shape s = shape_of(m);
    std::vector<double> seeds{s.loc - s.spread, s.loc, s.loc + s.spread};
    auto fn = [&m, order](double x, double* out) {
        // p * x^k by repeated multiplication: intermediates are integrand
        // values (finite when the moments exist), while a bare x^k can
        // overflow at extreme quadrature nodes before p damps it.
        double acc = pdf(m, x);
        for (int k = 0; k <= order; ++k) {
            out[k] = acc;
            acc *= x;
        }
    };
    auto res = quadrature::integrate_real_line(fn, order + 1, qcfg, seeds);
    // Renormalize: tiny mass defects from quadrature shouldn't leak into
    // sigma_0.
    if (res.values[0] <= 0.0)
        throw QuadratureError("density integrated to a non-positive mass");
    std::vector<double> out(order + 1);
    for (int k = 0; k <= order; ++k) out[k] = res.values[k] / res.values[0];
    return out;
}

}  // namespace

std::vector<double> DiscreteNoise::moments(int order) const {
    std::vector<double> m(order + 1, 0.0);
    for (size_t i = 0; i < atoms.size(); ++i) {
        double ak = 1.0;
        for (int k = 0; k <= order; ++k) {
            m[k] += probabilities[i] * ak;
            ak *= atoms[i];
        }
    }
    return m;
}

double pdf(const DensityModel& m, double x) {
    return std::visit(
        [x, &m](const auto& alt) -> double {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return gaussian_pdf(alt, x);
            else if constexpr (std::is_same_v<T, Laplace>)
                return laplace_pdf(alt, x);
            else if constexpr (std::is_same_v<T, Cauchy>)
                return cauchy_pdf(alt, x);
            else if constexpr (std::is_same_v<T, StudentT>)
                return student_t_pdf(alt, x);
            else if constexpr (std::is_same_v<T, Mixture>) {
                double acc = 0.0;
                for (size_t i = 0; i < alt.components.size(); ++i)
                    acc += alt.weights[i] * pdf(alt.components[i], x);
                return acc;
            } else if constexpr (std::is_same_v<T, RationalSurrogate>) {
                return pdf(*alt.prior, x) /
                       poly::eval(alt.lambda, x) * std::exp(-alt.log_norm);
            } else {
                return exp_poly_pdf(alt, x);
            }
        },
        m.v);
}

Tail tail(const DensityModel& m) {
    return std::visit(
        [](const auto& alt) -> Tail {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return {TailClass::SubGaussian, 0.0};
            else if constexpr (std::is_same_v<T, Laplace>)
                return {TailClass::Exponential, 0.0};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return {TailClass::Polynomial, 2.0};
            else if constexpr (std::is_same_v<T, StudentT>)
                return {TailClass::Polynomial, alt.dof + 1.0};
            else if constexpr (std::is_same_v<T, Mixture>) {
                // Heaviest component dominates.
                Tail worst{TailClass::SubGaussian, 0.0};
                for (const auto& c : alt.components) {
                    const Tail t = tail(c);
                    if (static_cast<int>(t.cls) > static_cast<int>(worst.cls) ||
                        (t.cls == worst.cls && t.cls == TailClass::Polynomial &&
                         t.exponent < worst.exponent))
                        worst = t;
                }
                return worst;
            } else if constexpr (std::is_same_v<T, RationalSurrogate>) {
                Tail t = tail(*alt.prior);
                if (t.cls == TailClass::Polynomial)
                    t.exponent += static_cast<double>(alt.lambda.size() - 1);
                return t;
            } else {
                return {TailClass::SubGaussian, 0.0};
            }
        },
        m.v);
}

bool moment_finite(const DensityModel& m, int k) {
    const Tail t = tail(m);
    if (t.cls != TailClass::Polynomial) return true;
    return static_cast<double>(k) < t.exponent - 1.0;
}

std::vector<double> moments(const DensityModel& m, int order,
                            const quadrature::QuadratureConfig& qcfg) {
    if (!moment_finite(m, order))
        throw ConfigError("moment of requested order diverges for this density");
    return std::visit(
        [&](const auto& alt) -> std::vector<double> {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return gaussian_moments(alt.mean, alt.stddev, order);
            else if constexpr (std::is_same_v<T, Laplace>)
                return laplace_moments(alt.loc, alt.scale, order);
            else if constexpr (std::is_same_v<T, Cauchy>) {
                if (order >= 1)
                    throw ConfigError("Cauchy moments of order >= 1 diverge");
                return {1.0};
            } else if constexpr (std::is_same_v<T, StudentT>)
                return student_t_moments(alt, order);
            else if constexpr (std::is_same_v<T, Mixture>) {
                std::vector<double> acc(order + 1, 0.0);
                for (size_t i = 0; i < alt.components.size(); ++i) {
                    const auto c = moments(alt.components[i], order, qcfg);
                    for (int k = 0; k <= order; ++k)
                        acc[k] += alt.weights[i] * c[k];
                }
                return acc;
            } else {
                return quadrature_moments(m, order, qcfg);
            }
        },
        m.v);
}

std::vector<double> truncated_moments(const DensityModel& m, int order,
                                      double radius,
                                      const quadrature::QuadratureConfig& qcfg) {
    const Shape s = shape_of(m);
    std::vector<double> seeds{s.loc - s.spread, s.loc, s.loc + s.spread};
    auto fn = [&m, order](double x, double* out) {
        double acc = pdf(m, x);
        for (int k = 0; k <= order; ++k) {
            out[k] = acc;
            acc *= x;
        }
    };
    auto res = quadrature::integrate(fn, order + 1, -radius, radius, qcfg, seeds);
    if (res.values[0] <= 0.0)
        throw QuadratureError("truncated density carries no mass");
    std::vector<double> out(order + 1);
    for (int k = 0; k <= order; ++k) out[k] = res.values[k] / res.values[0];
    return out;
}

std::pair<double, double> mass_window(const DensityModel& m, double eps,
                                      const quadrature::QuadratureConfig& qcfg) {
    // Exp-polynomial densities get an analytic window from the exponent:
    // outside the outermost solutions of poly(x) = min poly + log(1/eps) the
    // density is below eps times its peak and decays super-exponentially.
    // This stays valid even when the coefficients come from a solver that
    // stopped early and the density is not exactly normalized, where an
    // expanding search for 1 - eps of the mass could never terminate.
    if (const auto* e = std::get_if<ExpPoly>(&m.v)) {
        std::vector<double> crit = poly::root_real_parts(poly::derivative(e->lambda));
        crit.push_back(0.0);
        double best_x = 0.0, best_v = std::numeric_limits<double>::infinity();
        for (double r : crit) {
            const double v = poly::eval(e->lambda, r);
            if (v < best_v) {
                best_v = v;
                best_x = r;
            }
        }
        std::vector<double> shifted = e->lambda;
        shifted[0] -= best_v + std::log(1.0 / eps) + 10.0;
        std::vector<double> edges = poly::root_real_parts(shifted);
        double lo = best_x, hi = best_x;
        for (double r : edges) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (hi > lo) return {lo, hi};
        // No real crossings (already below threshold everywhere): fall through
        // to the generic search.
    }
    const Shape s = shape_of(m);
    double half = 8.0 * s.spread;
    for (int i = 0; i < 64; ++i) {
        const double lo = s.loc - half, hi = s.loc + half;
        const double mass =
            quadrature::integrate([&m](double x) { return pdf(m, x); }, lo, hi,
                                  qcfg, {s.loc});
        if (mass >= 1.0 - eps) return {lo, hi};
        half *= 1.5;
    }
    throw WindowError("could not find a window capturing the requested mass");
}

double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

double sample_gaussian(std::mt19937_64& rng) {
    // Box-Muller, cosine branch.
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double sample_gamma(double a, std::mt19937_64& rng) {
    // Marsaglia-Tsang; a >= 1 here (the boost for a < 1 applies on entry).
    if (a < 1.0) {
        const double u = uniform01(rng);
        return sample_gamma(a + 1.0, rng) * std::pow(u, 1.0 / a);
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double z = sample_gaussian(rng);
        const double v = std::pow(1.0 + c * z, 3);
        if (v <= 0.0) continue;
        const double u = uniform01(rng);
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v))
            return d * v;
    }
}

}  // namespace

double sample(const DensityModel& m, std::mt19937_64& rng) {
    return std::visit(
        [&rng](const auto& alt) -> double {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return alt.mean + alt.stddev * sample_gaussian(rng);
            else if constexpr (std::is_same_v<T, Laplace>) {
                const double u = uniform01(rng) - 0.5;
                return alt.loc +
                       alt.scale * std::copysign(std::log1p(-2.0 * std::fabs(u)), u);
            } else if constexpr (std::is_same_v<T, Cauchy>)
                return alt.loc + alt.scale * std::tan(kPi * (uniform01(rng) - 0.5));
            else if constexpr (std::is_same_v<T, StudentT>) {
                const double z = sample_gaussian(rng);
                const double chi2 = 2.0 * sample_gamma(0.5 * alt.dof, rng);
                return alt.loc + alt.scale * z / std::sqrt(chi2 / alt.dof);
            } else if constexpr (std::is_same_v<T, Mixture>) {
                double u = uniform01(rng);
                for (size_t i = 0; i < alt.weights.size(); ++i) {
                    if (u < alt.weights[i] || i + 1 == alt.weights.size())
                        return sample(alt.components[i], rng);
                    u -= alt.weights[i];
                }
                return sample(alt.components.back(), rng);
            } else {
                throw ConfigError(
                    "sampling is not supported for fitted density kinds");
            }
        },
        m.v);
}

double sample(const DiscreteNoise& n, std::mt19937_64& rng) {
    double u = uniform01(rng);
    for (size_t i = 0; i < n.atoms.size(); ++i) {
        if (u < n.probabilities[i] || i + 1 == n.atoms.size()) return n.atoms[i];
        u -= n.probabilities[i];
    }
    return n.atoms.back();
}

}  // namespace msf::densities
