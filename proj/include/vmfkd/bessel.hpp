#pragma once

#include <cstddef>

// log I_nu(x) for the modified Bessel function of the first kind, evaluated
// entirely in log space so concentrations up to 1e4 and orders in the
// thousands stay finite. Two regimes: the ascending power series for
// x < max(12, nu), and the uniform large-order (Debye) expansion otherwise,
// written in a form that stays valid down to nu = 0.

namespace vmfkd {

double log_bessel_i(double nu, double x);

// Ratio I_{nu+1}(x) / I_nu(x) in (0, 1) for x > 0.
double bessel_i_ratio(double nu, double x);

namespace detail {
// Both routes exposed for the regime-agreement tests.
double log_bessel_i_series(double nu, double x);
double log_bessel_i_uniform(double nu, double x);
}  // namespace detail

}  // namespace vmfkd
