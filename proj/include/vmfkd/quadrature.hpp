#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vmfkd/vmf.hpp"

namespace vmfkd {

// Fixed quadrature rules over S^{d-1}, d in {2, 3}. Weights sum to the
// sphere's surface area. Used as the integration oracle for density
// normalization and Monte Carlo convergence checks.
class SphereQuadrature {
  public:
    // Uniform angular grid on the circle.
    static SphereQuadrature circle(std::size_t n_nodes = 4096);
    // Gauss-Legendre in the polar cosine times a uniform azimuth grid.
    static SphereQuadrature sphere(std::size_t n_polar = 256,
                                   std::size_t n_azimuth = 512);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<UnitVector>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    double integrate(const std::function<double(const UnitVector&)>& f) const;

  private:
    SphereQuadrature(std::size_t dim, std::vector<UnitVector> nodes,
                     std::vector<double> weights);
    std::size_t dim_;
    std::vector<UnitVector> nodes_;
    std::vector<double> weights_;
};

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace vmfkd
