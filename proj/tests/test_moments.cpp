#include <doctest.h>

#include <cmath>
#include <vector>

#include "msf/densities.hpp"
#include "msf/errors.hpp"
#include "msf/moments.hpp"

using namespace msf;
using moments::MomentSequence;

namespace {

// Raw moments of N(mu, s) up to order 4, from the closed-form recursion.
std::vector<double> gauss_raw(double mu, double s, int order) {
    const double s2 = s * s;
    std::vector<double> m{1.0, mu, mu * mu + s2, mu * mu * mu + 3.0 * mu * s2,
                          mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2};
    m.resize(order + 1);
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("moments");

TEST_CASE("mean, variance and central moments") {
    const MomentSequence seq({1.0, 1.0, 2.0});
    CHECK(seq.order() == 2);
    CHECK(seq.mean() == doctest::Approx(1.0));
    CHECK(seq.variance() == doctest::Approx(1.0));

    const auto c = seq.central();
    REQUIRE(c.size() == 3);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(0.0));
    CHECK(c[2] == doctest::Approx(1.0));

    // Central moments of N(0.7, 1.3) are the moments of N(0, 1.3).
    const MomentSequence g(gauss_raw(0.7, 1.3, 4));
    const auto gc = g.central();
    const auto expect = gauss_raw(0.0, 1.3, 4);
    for (int k = 0; k <= 4; ++k)
        CHECK(gc[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("hankel matrix layout and positive definiteness") {
    const MomentSequence gauss({1.0, 0.0, 1.0, 0.0, 3.0});
    const auto H = gauss.hankel();
    REQUIRE(H.rows() == 3);
    REQUIRE(H.cols() == 3);
    CHECK(H(0, 0) == doctest::Approx(1.0));
    CHECK(H(0, 2) == doctest::Approx(1.0));
    CHECK(H(1, 1) == doctest::Approx(1.0));
    CHECK(H(2, 2) == doctest::Approx(3.0));
    CHECK(gauss.hankel_pd());

    // Eigenvalues of that Hankel matrix: 1 and 2 +- sqrt(2).
    CHECK(gauss.smallest_hankel_eigenvalue() ==
          doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("degenerate sequences fail the Hankel certificate") {
    // A point mass at 0: Hankel [[1,0],[0,0]] is singular.
    CHECK_FALSE(MomentSequence({1.0, 0.0, 0.0}).hankel_pd());
    // sigma_4 = 1 with unit variance: [[1,0,1],[0,1,0],[1,0,1]] singular.
    CHECK_FALSE(MomentSequence({1.0, 0.0, 1.0, 0.0, 1.0}).hankel_pd());
    // Infeasible: sigma_4 below sigma_2^2.
    CHECK_FALSE(MomentSequence({1.0, 0.0, 1.0, 0.0, 0.5}).hankel_pd());
}

TEST_CASE("time update matches Gaussian propagation in closed form") {
    // x' = 0.7 x + eta with x ~ N(1, 1) and eta ~ N(0.2, 0.5):
    // x' ~ N(0.9, sqrt(0.49 + 0.25)) exactly, so the pushed-forward raw
    // moments must be the Gaussian closed forms -- an oracle independent of
    // the binomial convolution used internally.
    const MomentSequence post(gauss_raw(1.0, 1.0, 4));
    const auto eta = gauss_raw(0.2, 0.5, 4);
    const MomentSequence pred = moments::time_update(post, 0.7, eta);
    const auto expect = gauss_raw(0.9, std::sqrt(0.49 + 0.25), 4);
    REQUIRE(pred.order() == 4);
    for (int k = 0; k <= 4; ++k)
        CHECK(pred[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("time update with discrete noise uses exact atom moments") {
    // x ~ N(0,1), eta = +-1 with probability 1/2, f = 1:
    // E[(x + eta)^2] = 1 + 1 = 2; E[(x + eta)^4] = 3 + 6 + 1 = 10
    // (odd cross terms vanish by symmetry).
    densities::DiscreteNoise n;
    n.atoms = {-1.0, 1.0};
    n.probabilities = {0.5, 0.5};
    const MomentSequence post({1.0, 0.0, 1.0, 0.0, 3.0});
    const MomentSequence pred = moments::time_update(post, 1.0, n.moments(4));
    CHECK(pred[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pred[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(pred[2] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pred[3] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(pred[4] == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("f = 0 forgets the state entirely") {
    const MomentSequence post(gauss_raw(5.0, 2.0, 4));
    const auto eta = gauss_raw(-0.3, 0.6, 4);
    const MomentSequence pred = moments::time_update(post, 0.0, eta);
    for (int k = 0; k <= 4; ++k)
        CHECK(pred[k] == doctest::Approx(eta[k]).epsilon(1e-14));
}

TEST_CASE("measurement update reproduces the conjugate Gaussian posterior") {
    // Prediction N(0,1), noise N(0,1), y = 1, h = 1. Conjugacy gives the
    // posterior N(1/2, sqrt(1/2)) and evidence N(y; 0, sqrt(2)).
    const auto upd = moments::measurement_update_moments(
        densities::Gaussian{0.0, 1.0}, densities::Gaussian{0.0, 1.0}, 1.0, 1.0,
        4);
    const auto expect = gauss_raw(0.5, std::sqrt(0.5), 4);
    REQUIRE(upd.moments.order() == 4);
    for (int k = 0; k <= 4; ++k)
        CHECK(upd.moments[k] == doctest::Approx(expect[k]).epsilon(1e-9));
    const double evidence =
        std::exp(-1.0 / 4.0) / std::sqrt(2.0 * M_PI * 2.0);
    CHECK(upd.normalizer == doctest::Approx(evidence).epsilon(1e-9));
}

TEST_CASE("observation gain scales with h") {
    // y = h x + eps with h = 2 halves the effective noise: posterior
    // variance (1/1 + h^2/r)^-1 = (1 + 4)^-1 = 1/5, mean h y / (r + h^2) ...
    // spelled out: N(0,1) prior, N(0,1) noise, y = 1, h = 2 ->
    // posterior N(2/5, sqrt(1/5)).
    const auto upd = moments::measurement_update_moments(
        densities::Gaussian{0.0, 1.0}, densities::Gaussian{0.0, 1.0}, 1.0, 2.0,
        2);
    CHECK(upd.moments[1] == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(upd.moments.variance() == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("incompatible observations raise DegenerateObservationError") {
    CHECK_THROWS_AS(moments::measurement_update_moments(
                        densities::Gaussian{0.0, 0.01},
                        densities::Gaussian{0.0, 0.01}, 1e6, 1.0, 2),
                    DegenerateObservationError);
}

TEST_CASE("non-Gaussian prediction: moments agree with direct quadrature") {
    // Laplace prediction with Gaussian noise has no conjugate form; check
    // the update against a hand-rolled quadrature of x^k L(x) N(y - x).
    const densities::DensityModel pred(densities::Laplace{0.0, 1.0});
    const densities::DensityModel noise(densities::Gaussian{0.0, 0.8});
    const double y = 0.9;
    const auto upd =
        moments::measurement_update_moments(pred, noise, y, 1.0, 2);

    const auto raw = [&](int k) {
        return quadrature::integrate_real_line(
            [&](double x) {
                return std::pow(x, k) * densities::pdf(pred, x) *
                       densities::pdf(noise, y - x);
            },
            {}, {0.0, y});
    };
    const double z = raw(0);
    CHECK(upd.normalizer == doctest::Approx(z).epsilon(1e-8));
    CHECK(upd.moments[1] == doctest::Approx(raw(1) / z).epsilon(1e-8));
    CHECK(upd.moments[2] == doctest::Approx(raw(2) / z).epsilon(1e-8));
}

TEST_SUITE_END();
