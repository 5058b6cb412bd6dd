#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vmfkd/bessel.hpp"
#include "vmfkd/common.hpp"
#include "vmfkd/quadrature.hpp"
#include "vmfkd/vmf.hpp"

using namespace vmfkd;

TEST_CASE("normalize") {
    const auto u = UnitVector::normalize(std::vector<double>{3.0, 4.0});
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));

    const auto e1 = UnitVector::normalize(std::vector<double>{1.0, 0.0, 0.0});
    CHECK(e1[0] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(UnitVector::normalize(std::vector<double>{0.0, 0.0}),
                    NumericError);
    CHECK_THROWS_AS(UnitVector::normalize(std::vector<double>{5.0}),
                    NumericError);

    // direction preserved: cosine with the input is 1
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.uniform(-3.0, 3.0);
        const auto n = UnitVector::normalize(v);
        const double vn = norm(v);
        if (vn == 0.0) continue;
        const double cosine = dot(n.span(), v) / vn;
        CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("log bessel against closed forms and std::cyl_bessel_i") {
    // I_{1/2}(x) = sqrt(2/(pi x)) sinh x
    for (double x : {0.3, 1.0, 2.5, 7.0, 30.0, 200.0}) {
        const double expected =
            0.5 * std::log(2.0 / (M_PI * x)) + x + std::log1p(-std::exp(-2.0 * x)) -
            std::log(2.0) + x * 0.0;
        // log(sinh x) = x + log(1 - e^{-2x}) - log 2
        const double log_sinh = x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
        const double closed = 0.5 * std::log(2.0 / (M_PI * x)) + log_sinh;
        (void)expected;
        CHECK(log_bessel_i(0.5, x) == doctest::Approx(closed).epsilon(1e-12));
    }
    // std special math as an independent oracle in the non-overflow regime
    for (double nu : {0.0, 0.5, 1.0, 1.5, 4.0, 11.5, 31.0}) {
        for (double x : {0.1, 0.9, 3.0, 12.5, 25.0, 60.0}) {
            const double ref = std::log(std::cyl_bessel_i(nu, x));
            CHECK(log_bessel_i(nu, x) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("bessel regimes agree at the switchover") {
    for (double nu : {0.0, 0.5, 1.0, 2.0, 7.5, 12.0, 40.0, 255.5, 2047.0}) {
        const double x = std::max(12.0, nu);
        const double series = detail::log_bessel_i_series(nu, x);
        const double uniform = detail::log_bessel_i_uniform(nu, x);
        CHECK(series ==
              doctest::Approx(uniform).epsilon(1e-8));  // relative agreement
    }
}

TEST_CASE("log_norm_const") {
    CHECK(log_norm_const(2, 0.0) ==
          doctest::Approx(std::log(1.0 / (2.0 * M_PI))).epsilon(1e-12));

    // d=3, kappa=1: C = kappa / (4 pi sinh kappa)
    const double expected3 = std::log(1.0 / (4.0 * M_PI * std::sinh(1.0)));
    CHECK(log_norm_const(3, 1.0) == doctest::Approx(expected3).epsilon(1e-10));
    CHECK(log_norm_const(3, 1.0) == doctest::Approx(-2.6912).epsilon(1e-3));

    // d=2, kappa=80 vs a 2e5-node trapezoid of exp(80 cos t)
    const double log_partition = oracles::log_circle_partition(80.0, 200000);
    CHECK(log_norm_const(2, 80.0) ==
          doctest::Approx(-log_partition).epsilon(1e-9));

    // stays finite deep into the large-kappa / high-d corner
    CHECK(std::isfinite(log_norm_const(2, 1e4)));
    CHECK(std::isfinite(log_norm_const(4096, 1e4)));
    CHECK(std::isfinite(log_norm_const(4096, 80.0)));

    CHECK_THROWS_AS(log_norm_const(2, -1.0), NumericError);

    // strictly decreasing in kappa at fixed d
    for (std::size_t d : {2u, 3u, 16u}) {
        double prev = log_norm_const(d, 1e-3);
        for (double k : {0.1, 0.5, 2.0, 8.0, 30.0, 80.0, 300.0}) {
            const double cur = log_norm_const(d, k);
            CHECK(cur < prev);
            prev = cur;
        }
        CHECK(log_norm_const(d, 1e-3) < log_norm_const(d, 0.0));
    }
}

TEST_CASE("log_density basics") {
    const auto mu = UnitVector::normalize(std::vector<double>{1.0, 0.0});
    const VmfDistribution uniform(mu, 0.0);
    const auto x = UnitVector::normalize(std::vector<double>{0.3, -0.7});
    CHECK(log_density(uniform, x) ==
          doctest::Approx(-log_surface_area(2)).epsilon(1e-12));

    const VmfDistribution d5(mu, 5.0);
    CHECK(log_density(d5, mu) ==
          doctest::Approx(log_norm_const(2, 5.0) + 5.0).epsilon(1e-12));

    const auto x3 = UnitVector::normalize(std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(log_density(d5, x3), NumericError);
}

TEST_CASE("quadrature weights sum to the surface area") {
    const auto circle = SphereQuadrature::circle();
    double sum = 0.0;
    for (double w : circle.weights()) sum += w;
    CHECK(sum == doctest::Approx(2.0 * M_PI).epsilon(1e-6));

    const auto sphere = SphereQuadrature::sphere();
    sum = 0.0;
    for (double w : sphere.weights()) sum += w;
    CHECK(sum == doctest::Approx(4.0 * M_PI).epsilon(1e-6));
}

TEST_CASE("density integrates to one on the quadrature grids") {
    Rng rng(17);
    for (std::size_t d : {2u, 3u}) {
        const auto quad =
            d == 2 ? SphereQuadrature::circle() : SphereQuadrature::sphere();
        for (double kappa : {0.0, 0.5, 2.0, 20.0, 80.0}) {
            const auto mu = UnitVector::from_unit(rng.unit_vector(d));
            const VmfDistribution dist(mu, kappa);
            const double integral = quad.integrate([&](const UnitVector& x) {
                return std::exp(log_density(dist, x));
            });
            CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("density peaks at the node closest to mu") {
    Rng rng(23);
    for (std::size_t d : {2u, 3u}) {
        const auto quad =
            d == 2 ? SphereQuadrature::circle() : SphereQuadrature::sphere();
        const auto mu = UnitVector::from_unit(rng.unit_vector(d));
        const VmfDistribution dist(mu, 20.0);
        std::size_t argmax_density = 0, argmax_cos = 0;
        double best_density = -1e300, best_cos = -2.0;
        for (std::size_t i = 0; i < quad.size(); ++i) {
            const double ld = log_density(dist, quad.nodes()[i]);
            if (ld > best_density) {
                best_density = ld;
                argmax_density = i;
            }
            const double c = dot(quad.nodes()[i].span(), mu.span());
            if (c > best_cos) {
                best_cos = c;
                argmax_cos = i;
            }
        }
        CHECK(argmax_density == argmax_cos);
    }
}

namespace {

struct Resultant {
    double length;
    std::vector<double> mean_direction;
};

Resultant empirical_resultant(const std::vector<UnitVector>& samples) {
    std::vector<double> mean(samples.front().dim(), 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s[i];
    for (auto& v : mean) v /= static_cast<double>(samples.size());
    Resultant r;
    r.length = norm(mean);
    r.mean_direction = std::move(mean);
    return r;
}

}  // namespace

TEST_CASE("sampler statistics match the Bessel-ratio oracle") {
    struct Case {
        std::size_t d;
        double kappa;
    };
    for (const Case c : {Case{3, 0.0}, Case{2, 80.0}, Case{10, 20.0}}) {
        Rng dir_rng(c.d * 7 + 1);
        std::vector<double> mu_raw(c.d, 0.0);
        mu_raw[0] = 1.0;
        if (c.d == 2) mu_raw = {1.0, 0.0};
        const auto mu = UnitVector::from_unit(mu_raw);
        const VmfDistribution dist(mu, c.kappa);
        const auto samples = sample(dist, 100000, 42);
        for (std::size_t i = 0; i < samples.size(); i += 997)
            CHECK(std::abs(norm(samples[i].span()) - 1.0) < 1e-9);
        const auto res = empirical_resultant(samples);
        const double expected = mean_resultant_length(c.d, c.kappa);
        if (c.kappa == 0.0)
            CHECK(res.length < 0.02);
        else
            CHECK(std::abs(res.length - expected) < 0.01);
        if (c.kappa >= 20.0) {
            const double cosine =
                dot(res.mean_direction, mu.span()) / res.length;
            CHECK(cosine >= 0.999);
        }
    }
}

TEST_CASE("mean_resultant_length properties") {
    CHECK(mean_resultant_length(2, 0.0) == 0.0);
    CHECK(mean_resultant_length(7, 0.0) == 0.0);
    // d=3 closed form: coth(k) - 1/k
    CHECK(mean_resultant_length(3, 1.0) ==
          doctest::Approx(1.0 / std::tanh(1.0) - 1.0).epsilon(1e-10));
    CHECK(mean_resultant_length(3, 1.0) == doctest::Approx(0.3130).epsilon(1e-3));
    CHECK(mean_resultant_length(2, 5000.0) > 0.999);
    for (std::size_t d : {2u, 3u, 10u}) {
        double prev = 0.0;
        for (double k : {0.01, 0.1, 1.0, 5.0, 25.0, 100.0, 1000.0}) {
            const double a = mean_resultant_length(d, k);
            CHECK(a > prev);
            CHECK(a < 1.0);
            prev = a;
        }
    }
}

TEST_CASE("sampling is deterministic given the seed") {
    const auto mu = UnitVector::normalize(std::vector<double>{0.5, -1.0, 2.0});
    const VmfDistribution dist(mu, 12.0);
    const auto a = sample(dist, 100, 7);
    const auto b = sample(dist, 100, 7);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].components() == b[i].components());
    const auto c = sample(dist, 100, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_diff = any_diff || a[i].components() != c[i].components();
    CHECK(any_diff);
}

TEST_CASE("rotation equivariance of sampling") {
    // Fixed seed pair: sampling around mu then rotating matches the
    // statistics of sampling around R mu.
    const double kappa = 15.0;
    const std::size_t n = 50000;

    // d=2: rotate by a fixed angle.
    {
        const double phi = 1.1;
        const auto mu = UnitVector::normalize(std::vector<double>{1.0, 0.0});
        const auto rotated_mu = UnitVector::normalize(
            std::vector<double>{std::cos(phi), std::sin(phi)});
        const auto base = sample(VmfDistribution(mu, kappa), n, 5);
        std::vector<double> mean_rot(2, 0.0);
        for (const auto& s : base) {
            mean_rot[0] += std::cos(phi) * s[0] - std::sin(phi) * s[1];
            mean_rot[1] += std::sin(phi) * s[0] + std::cos(phi) * s[1];
        }
        for (auto& v : mean_rot) v /= static_cast<double>(n);
        const auto direct = sample(VmfDistribution(rotated_mu, kappa), n, 6);
        const auto res_direct = empirical_resultant(direct);
        CHECK(std::abs(norm(mean_rot) - res_direct.length) < 0.01);
        const double cosine = dot(mean_rot, res_direct.mean_direction) /
                              (norm(mean_rot) * res_direct.length);
        CHECK(cosine > 0.9995);
    }

    // d=4: rotate by a cyclic coordinate permutation (an orthogonal map).
    {
        const auto mu =
            UnitVector::normalize(std::vector<double>{0.8, 0.2, -0.4, 0.1});
        const auto rotated_mu =
            UnitVector::normalize(std::vector<double>{0.1, 0.8, 0.2, -0.4});
        const auto base = sample(VmfDistribution(mu, kappa), n, 9);
        std::vector<double> mean_rot(4, 0.0);
        for (const auto& s : base) {
            mean_rot[0] += s[3];
            mean_rot[1] += s[0];
            mean_rot[2] += s[1];
            mean_rot[3] += s[2];
        }
        for (auto& v : mean_rot) v /= static_cast<double>(n);
        const auto direct = sample(VmfDistribution(rotated_mu, kappa), n, 10);
        const auto res_direct = empirical_resultant(direct);
        CHECK(std::abs(norm(mean_rot) - res_direct.length) < 0.01);
        const double cosine = dot(mean_rot, res_direct.mean_direction) /
                              (norm(mean_rot) * res_direct.length);
        CHECK(cosine > 0.9995);
    }
}

TEST_CASE("sample count precondition") {
    const auto mu = UnitVector::normalize(std::vector<double>{1.0, 0.0});
    const VmfDistribution dist(mu, 1.0);
    CHECK_THROWS_AS(sample(dist, 0, 1), NumericError);
}
