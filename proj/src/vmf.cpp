#include "vmfkd/vmf.hpp"

#include <cmath>
#include <string>

#include "vmfkd/bessel.hpp"
#include "vmfkd/common.hpp"
#include "vmfkd/kernels.hpp"

namespace vmfkd {
namespace {

constexpr double kUnitNormTol = 1e-9;
// Below this concentration the distribution is numerically uniform and the
// d=2 envelope parameters lose precision to cancellation.
constexpr double kUniformKappa = 1e-7;

void check_dim(std::size_t d) {
    if (d < 2) throw NumericError("sphere dimension must satisfy d >= 2");
}

}  // namespace

UnitVector UnitVector::normalize(std::span<const double> v) {
    check_dim(v.size());
    const double n = std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
    if (!(n > 0.0) || !std::isfinite(n))
        throw NumericError("cannot normalize a zero or non-finite vector");
    std::vector<double> out(v.begin(), v.end());
    kernels::scal(1.0 / n, out.data(), out.size());
    return UnitVector(std::move(out));
}

UnitVector UnitVector::from_unit(std::vector<double> v) {
    check_dim(v.size());
    const double n = std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
    if (std::abs(n - 1.0) > kUnitNormTol)
        throw NumericError("vector is not unit norm (|v| = " + fmt_double(n) + ")");
    return UnitVector(std::move(v));
}

VmfDistribution::VmfDistribution(UnitVector mean_direction, double concentration)
    : mu(std::move(mean_direction)), kappa(concentration) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
        throw NumericError("vMF concentration must be finite and >= 0");
}

double log_surface_area(std::size_t d) {
    check_dim(d);
    const double half_d = 0.5 * static_cast<double>(d);
    return std::log(2.0) + half_d * std::log(M_PI) - std::lgamma(half_d);
}

double log_norm_const(std::size_t d, double kappa) {
    check_dim(d);
    if (kappa < 0.0) throw NumericError("vMF concentration must be >= 0");
    if (kappa == 0.0) return -log_surface_area(d);
    const double half_d = 0.5 * static_cast<double>(d);
    return (half_d - 1.0) * std::log(kappa) - half_d * std::log(2.0 * M_PI) -
           log_bessel_i(half_d - 1.0, kappa);
}

double log_density(const VmfDistribution& dist, const UnitVector& x) {
    if (x.dim() != dist.dim())
        throw NumericError("vMF dimension mismatch: " + std::to_string(dist.dim()) +
                           " vs " + std::to_string(x.dim()));
    const double cosine =
        kernels::dot(dist.mu.components().data(), x.components().data(), x.dim());
    return log_norm_const(dist.dim(), dist.kappa) + dist.kappa * cosine;
}

double mean_resultant_length(std::size_t d, double kappa) {
    check_dim(d);
    if (kappa < 0.0) throw NumericError("vMF concentration must be >= 0");
    if (kappa == 0.0) return 0.0;
    return bessel_i_ratio(0.5 * static_cast<double>(d) - 1.0, kappa);
}

namespace {

// Best-Fisher wrapped-Cauchy rejection for the von Mises angle, d = 2.
double sample_von_mises_angle(double kappa, Rng& rng) {
    if (kappa < kUniformKappa) return rng.uniform(0.0, 2.0 * M_PI);
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (;;) {
        const double z = std::cos(M_PI * rng.uniform());
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        const double u2 = rng.uniform();
        if (c * (2.0 - c) - u2 > 0.0 ||
            (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0)) {
            const double theta = std::acos(std::clamp(f, -1.0, 1.0));
            return rng.uniform() < 0.5 ? -theta : theta;
        }
    }
}

std::vector<double> sample_d2(const VmfDistribution& dist, Rng& rng) {
    const double base = std::atan2(dist.mu[1], dist.mu[0]);
    const double theta = base + sample_von_mises_angle(dist.kappa, rng);
    return {std::cos(theta), std::sin(theta)};
}

// Wood's rejection sampler for the cosine w along mu, d >= 3.
double sample_cosine(double kappa, std::size_t d, Rng& rng) {
    const double m = static_cast<double>(d - 1);
    const double b = m / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);
    for (;;) {
        const double z = rng.beta(0.5 * m, 0.5 * m);
        const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u))
            return std::clamp(w, -1.0, 1.0);
    }
}

std::vector<double> sample_general(const VmfDistribution& dist, Rng& rng) {
    const std::size_t d = dist.dim();
    std::vector<double> y(d, 0.0);
    if (dist.kappa < kUniformKappa) {
        y = rng.unit_vector(d);
    } else {
        const double w = sample_cosine(dist.kappa, d, rng);
        const std::vector<double> tangent = rng.unit_vector(d - 1);
        const double sin_w = std::sqrt(std::max(0.0, 1.0 - w * w));
        y[0] = w;
        for (std::size_t i = 1; i < d; ++i) y[i] = sin_w * tangent[i - 1];
    }
    // Householder reflection taking e1 to mu.
    std::vector<double> u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = dist.mu[i];
    u[0] -= 1.0;
    const double unorm2 = kernels::dot(u.data(), u.data(), d);
    if (unorm2 > 1e-30) {
        const double proj = kernels::dot(u.data(), y.data(), d);
        kernels::axpy(-2.0 * proj / unorm2, u.data(), y.data(), d);
    }
    // Renormalize to keep the 1e-9 unit-norm contract after the reflection.
    const double n = std::sqrt(kernels::dot(y.data(), y.data(), d));
    kernels::scal(1.0 / n, y.data(), d);
    return y;
}

}  // namespace

std::vector<double> sample_one(const VmfDistribution& dist, Rng& rng) {
    return dist.dim() == 2 ? sample_d2(dist, rng) : sample_general(dist, rng);
}

std::vector<UnitVector> sample(const VmfDistribution& dist, std::size_t n,
                               Rng& rng) {
    if (n < 1) throw NumericError("sample count must be >= 1");
    std::vector<UnitVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(UnitVector::from_unit(sample_one(dist, rng)));
    return out;
}

}  // namespace vmfkd
