#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vmfkd/rng.hpp"

namespace vmfkd {

// Point on the unit hypersphere S^{d-1}; norm 1 within 1e-9, d >= 2.
class UnitVector {
  public:
    // Projects v onto the sphere. Throws NumericError for the zero vector.
    static UnitVector normalize(std::span<const double> v);
    // Accepts a vector that is already unit norm (validated).
    static UnitVector from_unit(std::vector<double> v);

    std::size_t dim() const { return v_.size(); }
    const std::vector<double>& components() const { return v_; }
    double operator[](std::size_t i) const { return v_[i]; }
    std::span<const double> span() const { return {v_.data(), v_.size()}; }

  private:
    explicit UnitVector(std::vector<double> v) : v_(std::move(v)) {}
    std::vector<double> v_;
};

// von Mises-Fisher distribution on S^{d-1}: density C_d(kappa) exp(kappa mu.x).
struct VmfDistribution {
    UnitVector mu;
    double kappa = 0.0;

    VmfDistribution(UnitVector mean_direction, double concentration);
    std::size_t dim() const { return mu.dim(); }
};

// log surface area of S^{d-1}.
double log_surface_area(std::size_t d);

// log C_d(kappa); kappa = 0 is the exact uniform branch log(1/|S^{d-1}|).
// Finite for kappa up to at least 1e4 and d up to at least 4096.
double log_norm_const(std::size_t d, double kappa);

double log_density(const VmfDistribution& dist, const UnitVector& x);

// Expected resultant length A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa).
double mean_resultant_length(std::size_t d, double kappa);

// Exact rejection samplers: wrapped-angle (Best-Fisher) for d = 2, Wood's
// beta-envelope scheme plus a Householder reflection onto mu for d >= 3.
// Deterministic given the generator state.
std::vector<double> sample_one(const VmfDistribution& dist, Rng& rng);
std::vector<UnitVector> sample(const VmfDistribution& dist, std::size_t n,
                               Rng& rng);
inline std::vector<UnitVector> sample(const VmfDistribution& dist,
                                      std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(dist, n, rng);
}

}  // namespace vmfkd
