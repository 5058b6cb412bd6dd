#include "vmfkd/quadrature.hpp"

#include <cmath>

#include "vmfkd/common.hpp"

namespace vmfkd {

void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    // Newton iteration from the Chebyshev-based initial guess; symmetric
    // roots, so only the first half is solved.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

SphereQuadrature::SphereQuadrature(std::size_t dim, std::vector<UnitVector> nodes,
                                   std::vector<double> weights)
    : dim_(dim), nodes_(std::move(nodes)), weights_(std::move(weights)) {}

SphereQuadrature SphereQuadrature::circle(std::size_t n_nodes) {
    if (n_nodes < 3) throw NumericError("circle quadrature needs >= 3 nodes");
    std::vector<UnitVector> nodes;
    std::vector<double> weights;
    nodes.reserve(n_nodes);
    weights.assign(n_nodes, 2.0 * M_PI / static_cast<double>(n_nodes));
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double theta = 2.0 * M_PI * static_cast<double>(i) / n_nodes;
        nodes.push_back(
            UnitVector::from_unit({std::cos(theta), std::sin(theta)}));
    }
    return SphereQuadrature(2, std::move(nodes), std::move(weights));
}

SphereQuadrature SphereQuadrature::sphere(std::size_t n_polar,
                                          std::size_t n_azimuth) {
    if (n_polar < 2 || n_azimuth < 3)
        throw NumericError("sphere quadrature grid too small");
    std::vector<double> t, wt;
    gauss_legendre(n_polar, t, wt);
    std::vector<UnitVector> nodes;
    std::vector<double> weights;
    nodes.reserve(n_polar * n_azimuth);
    weights.reserve(n_polar * n_azimuth);
    const double wphi = 2.0 * M_PI / static_cast<double>(n_azimuth);
    for (std::size_t i = 0; i < n_polar; ++i) {
        const double ct = t[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (std::size_t j = 0; j < n_azimuth; ++j) {
            const double phi = wphi * static_cast<double>(j);
            std::vector<double> v{st * std::cos(phi), st * std::sin(phi), ct};
            nodes.push_back(UnitVector::normalize(v));
            weights.push_back(wt[i] * wphi);
        }
    }
    return SphereQuadrature(3, std::move(nodes), std::move(weights));
}

double SphereQuadrature::integrate(
    const std::function<double(const UnitVector&)>& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        acc += weights_[i] * f(nodes_[i]);
    return acc;
}

}  // namespace vmfkd
