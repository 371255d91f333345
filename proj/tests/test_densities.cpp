#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "msf/densities.hpp"
#include "msf/errors.hpp"
#include "msf/quadrature.hpp"

using namespace msf;
using densities::DensityModel;

namespace {

DensityModel bimodal_mixture() {
    // 0.6 N(-2, 1) + 0.4 N(1, 0.5), the recurring two-lobe target.
    densities::Mixture mix;
    mix.weights = {0.6, 0.4};
    mix.components.push_back(densities::Gaussian{-2.0, 1.0});
    mix.components.push_back(densities::Gaussian{1.0, 0.5});
    return mix;
}

}  // namespace

TEST_SUITE_BEGIN("densities");

TEST_CASE("pdf matches closed forms at reference points") {
    // N(0,1) at 0: 1/sqrt(2 pi)
    CHECK(densities::pdf(densities::Gaussian{0.0, 1.0}, 0.0) ==
          doctest::Approx(0.3989422804014327).epsilon(1e-14));
    // N(1,2) at 3: exp(-1/2) / (2 sqrt(2 pi))
    CHECK(densities::pdf(densities::Gaussian{1.0, 2.0}, 3.0) ==
          doctest::Approx(std::exp(-0.5) / (2.0 * std::sqrt(2.0 * M_PI)))
              .epsilon(1e-14));
    // Laplace(0,1): 1/2 at the peak, e^-1/2 one scale out.
    CHECK(densities::pdf(densities::Laplace{0.0, 1.0}, 0.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
    CHECK(densities::pdf(densities::Laplace{0.0, 1.0}, 1.0) ==
          doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));
    // Cauchy(0,1) at 0: 1/pi.
    CHECK(densities::pdf(densities::Cauchy{0.0, 1.0}, 0.0) ==
          doctest::Approx(1.0 / M_PI).epsilon(1e-14));
    // Student t with 4 dof at 0: exactly 3/8.
    CHECK(densities::pdf(densities::StudentT{4.0, 0.0, 1.0}, 0.0) ==
          doctest::Approx(0.375).epsilon(1e-13));
    // Mixture pdf is the weighted sum of component pdfs.
    const DensityModel mix = bimodal_mixture();
    CHECK(densities::pdf(mix, 0.3) ==
          doctest::Approx(0.6 * densities::pdf(densities::Gaussian{-2.0, 1.0}, 0.3) +
                          0.4 * densities::pdf(densities::Gaussian{1.0, 0.5}, 0.3))
              .epsilon(1e-14));
}

TEST_CASE("exp-poly pdf evaluates exp(-poly)") {
    // lambda = (log sqrt(2 pi), 0, 1/2) is exactly the standard normal.
    densities::ExpPoly g{{0.5 * std::log(2.0 * M_PI), 0.0, 0.5}};
    CHECK(densities::pdf(DensityModel(g), 0.7) ==
          doctest::Approx(densities::pdf(densities::Gaussian{0.0, 1.0}, 0.7))
              .epsilon(1e-13));
}

TEST_CASE("rational surrogate pdf divides the prior by q") {
    densities::RationalSurrogate r;
    r.prior = std::make_shared<DensityModel>(densities::Gaussian{0.0, 1.0});
    r.lambda = {2.0, 0.0, 1.0};  // q(x) = 2 + x^2
    r.log_norm = 0.25;
    const double x = 1.3;
    CHECK(densities::pdf(DensityModel(r), x) ==
          doctest::Approx(densities::pdf(densities::Gaussian{0.0, 1.0}, x) /
                          (2.0 + x * x) / std::exp(0.25))
              .epsilon(1e-13));
}

TEST_CASE("Gaussian moments follow the Hermite recursion") {
    // N(mu, s): sigma_1 = mu, sigma_2 = mu^2 + s^2,
    // sigma_3 = mu^3 + 3 mu s^2, sigma_4 = mu^4 + 6 mu^2 s^2 + 3 s^4.
    const double mu = 0.7, s = 1.3, s2 = s * s;
    const auto sig = densities::moments(densities::Gaussian{mu, s}, 4);
    REQUIRE(sig.size() == 5);
    CHECK(sig[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sig[1] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(sig[2] == doctest::Approx(mu * mu + s2).epsilon(1e-12));
    CHECK(sig[3] == doctest::Approx(mu * mu * mu + 3.0 * mu * s2).epsilon(1e-12));
    CHECK(sig[4] == doctest::Approx(mu * mu * mu * mu + 6.0 * mu * mu * s2 +
                                    3.0 * s2 * s2)
                        .epsilon(1e-12));
}

TEST_CASE("Laplace and Student t moments match closed forms") {
    // Laplace(0, b): even central moments k! b^k -> var 2b^2, mu4 24 b^4.
    const double b = 0.8;
    const auto lap = densities::moments(densities::Laplace{0.0, b}, 4);
    CHECK(lap[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lap[2] == doctest::Approx(2.0 * b * b).epsilon(1e-10));
    CHECK(lap[3] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(lap[4] == doctest::Approx(24.0 * b * b * b * b).epsilon(1e-10));

    // Student t, 5 dof, scale c: variance c^2 nu/(nu-2) = 5/3 c^2.
    const double c = 1.4;
    const auto st = densities::moments(densities::StudentT{5.0, 0.0, c}, 2);
    CHECK(st[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(st[2] == doctest::Approx(c * c * 5.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("mixture moments are weighted component moments") {
    const DensityModel mix = bimodal_mixture();
    const auto sig = densities::moments(mix, 6);
    const auto a = densities::moments(densities::Gaussian{-2.0, 1.0}, 6);
    const auto d = densities::moments(densities::Gaussian{1.0, 0.5}, 6);
    for (int k = 0; k <= 6; ++k)
        CHECK(sig[k] ==
              doctest::Approx(0.6 * a[k] + 0.4 * d[k]).epsilon(1e-10));
}

TEST_CASE("divergent moments are rejected with ConfigError") {
    CHECK_THROWS_AS(densities::moments(densities::Cauchy{0.0, 1.0}, 2),
                    ConfigError);
    // t with 4 dof: tail exponent 5, so k = 4 diverges but k = 2 exists.
    CHECK_THROWS_AS(densities::moments(densities::StudentT{4.0, 0.0, 1.0}, 4),
                    ConfigError);
    CHECK_NOTHROW(densities::moments(densities::StudentT{4.0, 0.0, 1.0}, 2));
}

TEST_CASE("truncated moments renormalize within the radius") {
    // Cauchy(0,1) on [-1, 1]: mass 1/2, restricted second moment
    // (2/pi - 1/2) / (1/2) = 4/pi - 1.
    const auto sig = densities::truncated_moments(densities::Cauchy{0.0, 1.0},
                                                  2, 1.0);
    REQUIRE(sig.size() == 3);
    CHECK(sig[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sig[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(sig[2] == doctest::Approx(4.0 / M_PI - 1.0).epsilon(1e-10));

    // A light-tailed density barely notices a wide truncation.
    const auto gauss = densities::truncated_moments(
        densities::Gaussian{0.5, 1.0}, 4, 12.0);
    const auto full = densities::moments(densities::Gaussian{0.5, 1.0}, 4);
    for (int k = 0; k <= 4; ++k)
        CHECK(gauss[k] == doctest::Approx(full[k]).epsilon(1e-9));
}

TEST_CASE("tail classification ranks the density families") {
    using densities::TailClass;
    CHECK(densities::tail(densities::Gaussian{}).cls == TailClass::SubGaussian);
    CHECK(densities::tail(densities::Laplace{}).cls == TailClass::Exponential);

    const auto cauchy = densities::tail(densities::Cauchy{});
    CHECK(cauchy.cls == TailClass::Polynomial);
    CHECK(cauchy.exponent == doctest::Approx(2.0));

    const auto st = densities::tail(densities::StudentT{4.0, 0.0, 1.0});
    CHECK(st.cls == TailClass::Polynomial);
    CHECK(st.exponent == doctest::Approx(5.0));

    // The heaviest component dominates a mixture.
    densities::Mixture mix;
    mix.weights = {0.9, 0.1};
    mix.components.push_back(densities::Gaussian{});
    mix.components.push_back(densities::Cauchy{});
    CHECK(densities::tail(DensityModel(mix)).cls == TailClass::Polynomial);

    // Dividing a polynomial-tailed prior by a degree-d q thins the tail by d.
    densities::RationalSurrogate r;
    r.prior = std::make_shared<DensityModel>(densities::Cauchy{0.0, 1.0});
    r.lambda = {1.0, 0.0, 0.0, 0.0, 0.5};  // degree 4
    const auto thinned = densities::tail(DensityModel(r));
    CHECK(thinned.cls == TailClass::Polynomial);
    CHECK(thinned.exponent == doctest::Approx(6.0));
    CHECK(densities::moment_finite(DensityModel(r), 4));
    CHECK_FALSE(densities::moment_finite(DensityModel(r), 5));
}

TEST_CASE("mass_window captures all but eps of the mass") {
    const DensityModel mix = bimodal_mixture();
    const auto [lo, hi] = densities::mass_window(mix, 1e-9);
    CHECK(lo < -2.0);
    CHECK(hi > 1.0);
    const double inside = quadrature::integrate(
        [&](double x) { return densities::pdf(mix, x); }, lo, hi, {},
        {-2.0, 1.0});
    CHECK(inside >= 1.0 - 1e-8);

    // Heavy tails need a much wider window; it must still be finite.
    const auto [clo, chi] = densities::mass_window(densities::Cauchy{0.0, 1.0},
                                                   1e-6);
    CHECK(std::isfinite(clo));
    CHECK(std::isfinite(chi));
    const double cmass = quadrature::integrate(
        [](double x) { return densities::pdf(densities::Cauchy{0.0, 1.0}, x); },
        clo, chi, {}, {0.0});
    CHECK(cmass >= 1.0 - 1e-5);
}

TEST_CASE("mass_window solves exp-poly windows from the exponent") {
    // Standard normal written as an exp-poly.
    densities::ExpPoly g{{0.5 * std::log(2.0 * M_PI), 0.0, 0.5}};
    const auto [lo, hi] = densities::mass_window(DensityModel(g), 1e-9);
    CHECK(lo < -6.0);
    CHECK(hi > 6.0);

    // An unnormalized exp-poly (total mass e^{-1/2} < 1) must still get a
    // window: the expanding mass search can never reach 1 - eps here, so the
    // window has to come from the exponent's own geometry.
    densities::ExpPoly off{{0.5 * std::log(2.0 * M_PI) + 0.5, 0.0, 0.5}};
    std::pair<double, double> w{0.0, 0.0};
    CHECK_NOTHROW(w = densities::mass_window(DensityModel(off), 1e-9));
    CHECK(w.first < -6.0);
    CHECK(w.second > 6.0);
}

TEST_CASE("discrete noise moments are exact atom sums") {
    densities::DiscreteNoise n;
    n.atoms = {-0.8, 0.8};
    n.probabilities = {0.5, 0.5};
    const auto m = n.moments(4);
    REQUIRE(m.size() == 5);
    CHECK(m[0] == doctest::Approx(1.0));
    CHECK(m[1] == doctest::Approx(0.0));
    CHECK(m[2] == doctest::Approx(0.64));
    CHECK(m[3] == doctest::Approx(0.0));
    CHECK(m[4] == doctest::Approx(0.4096));
}

TEST_CASE("sampling is deterministic per seed and empirically sound") {
    const DensityModel g(densities::Gaussian{3.0, 1.0});

    std::mt19937_64 a(99), b(99), c(100);
    for (int i = 0; i < 64; ++i) {
        const double xa = densities::sample(g, a);
        CHECK(xa == densities::sample(g, b));  // bitwise per seed
        (void)densities::sample(g, c);
    }

    std::mt19937_64 rng(7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = densities::sample(g, rng);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(3.0).epsilon(0.02));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("discrete sampling respects the probabilities") {
    densities::DiscreteNoise n;
    n.atoms = {-1.0, 0.0, 2.0};
    n.probabilities = {0.2, 0.5, 0.3};
    std::mt19937_64 rng(5);
    int counts[3] = {0, 0, 0};
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
        const double x = densities::sample(n, rng);
        if (x == -1.0) ++counts[0];
        else if (x == 0.0) ++counts[1];
        else if (x == 2.0) ++counts[2];
        else FAIL("sample returned a value that is not an atom");
    }
    CHECK(counts[0] / static_cast<double>(draws) == doctest::Approx(0.2).epsilon(0.05));
    CHECK(counts[1] / static_cast<double>(draws) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(counts[2] / static_cast<double>(draws) == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("uniform01 stays inside the open unit interval") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = densities::uniform01(rng);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_SUITE_END();
