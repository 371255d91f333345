#include <doctest.h>

#include <cmath>
#include <vector>

#include "msf/errors.hpp"
#include "msf/quadrature.hpp"

using namespace msf;

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143268;

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

TEST_SUITE_BEGIN("quadrature");

TEST_CASE("polynomial and trigonometric integrals on finite intervals") {
    CHECK(quadrature::integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(quadrature::integrate([](double x) { return std::sin(x); }, 0.0,
                                M_PI) == doctest::Approx(2.0).epsilon(1e-12));
    // Degenerate or reversed intervals carry no mass.
    CHECK(quadrature::integrate([](double x) { return x; }, 1.0, 1.0) == 0.0);
    CHECK(quadrature::integrate([](double x) { return x; }, 1.0, 0.0) == 0.0);
}

TEST_CASE("vector integrand shares one subdivision across components") {
    // Standard normal moment family over [-9, 9]: 1, 0, 1, 0, 3.
    const auto res = quadrature::integrate(
        [](double x, double* out) {
            const double w = std_normal_pdf(x);
            double acc = w;
            for (int k = 0; k <= 4; ++k) {
                out[k] = acc;
                acc *= x;
            }
        },
        5, -9.0, 9.0);
    REQUIRE(res.values.size() == 5);
    CHECK(res.values[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.values[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(res.values[2] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.values[3] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(res.values[4] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("real-line transform integrates a Gaussian to unit mass") {
    const double mass = quadrature::integrate_real_line(
        [](double x) { return std_normal_pdf(x); });
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("real-line transform handles slowly decaying tails") {
    // Cauchy mass: the integrand decays like 1/x^2, the hardest case the
    // substitution supports. Deep refinement near t = +-1 must not evaluate
    // the (rounded) endpoint itself, where x would overflow to infinity.
    const double mass = quadrature::integrate_real_line(
        [](double x) { return 1.0 / (M_PI * (1.0 + x * x)); });
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

    // Second moment of a Student t with 5 dof: dof/(dof-2) = 5/3.
    const double c = std::tgamma(3.0) / (std::sqrt(5.0 * M_PI) * std::tgamma(2.5));
    const double second = quadrature::integrate_real_line([c](double x) {
        return x * x * c * std::pow(1.0 + x * x / 5.0, -3.0);
    });
    CHECK(second == doctest::Approx(5.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("seeds let the partition find a narrow remote spike") {
    // N(6, 0.05) on [-50, 50]: every node of the unseeded 15-point first
    // sweep sits >80 standard deviations from the peak, so the rule sees a
    // flat zero and stops. Seeding a split at the peak puts nodes on the
    // shoulder and refinement takes over.
    const double sd = 0.05;
    const auto spike = [sd](double x) {
        const double z = (x - 6.0) / sd;
        return kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
    };
    const double mass =
        quadrature::integrate(spike, -50.0, 50.0, {}, {6.0});
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exhausting the interval budget throws") {
    quadrature::QuadratureConfig tight;
    tight.rel_tol = 1e-15;
    tight.abs_tol = 0.0;
    tight.max_intervals = 4;
    CHECK_THROWS_AS(
        quadrature::integrate([](double x) { return std::sqrt(std::abs(x)); },
                              -1.0, 1.0, tight),
        QuadratureError);
}

TEST_CASE("results are deterministic across repeated calls") {
    const auto run = [] {
        return quadrature::integrate_real_line(
            [](double x) { return std_normal_pdf(x) * std::cos(3.0 * x); });
    };
    const double a = run();
    const double b = run();
    CHECK(a == b);  // bitwise
    // Analytic value: exp(-9/2).
    CHECK(a == doctest::Approx(std::exp(-4.5)).epsilon(1e-10));
}

TEST_CASE("non-finite integrand values are rejected") {
    CHECK_THROWS_AS(quadrature::integrate(
                        [](double x) { return 1.0 / x; }, -1.0, 1.0),
                    QuadratureError);
}

TEST_SUITE_END();
