#include "vmfkd/bessel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "vmfkd/common.hpp"

namespace vmfkd {
namespace {

constexpr int kUniformTerms = 19;  // u_0 .. u_18

// Coefficients of the Debye polynomials u_k(t), built from the recurrence
//   u_{k+1} = t^2 (1 - t^2) u_k' / 2 + (1/8) \int_0^t (1 - 5 tau^2) u_k
// coeffs[k][j] holds the t^j coefficient of u_k.
const std::vector<std::vector<double>>& debye_polynomials() {
    static const std::vector<std::vector<double>> table = [] {
        std::vector<std::vector<double>> u(kUniformTerms);
        u[0] = {1.0};
        for (int k = 0; k + 1 < kUniformTerms; ++k) {
            const auto& c = u[k];
            std::vector<double> next(c.size() + 3, 0.0);
            // t^2 (1 - t^2) u_k' / 2
            for (std::size_t j = 1; j < c.size(); ++j) {
                const double d = static_cast<double>(j) * c[j];  // t^(j-1)
                next[j + 1] += 0.5 * d;
                next[j + 3] -= 0.5 * d;
            }
            // (1/8) integral of (1 - 5 tau^2) u_k
            for (std::size_t j = 0; j < c.size(); ++j) {
                next[j + 1] += 0.125 * c[j] / static_cast<double>(j + 1);
                next[j + 3] -= 0.625 * c[j] / static_cast<double>(j + 3);
            }
            u[k + 1] = std::move(next);
        }
        return u;
    }();
    return table;
}

}  // namespace

namespace detail {

// Ascending series sum_k (x/2)^(nu+2k) / (k! Gamma(nu+k+1)), accumulated as a
// streaming log-sum-exp so huge orders and arguments never overflow.
double log_bessel_i_series(double nu, double x) {
    const double log_half_x = std::log(0.5 * x);
    double max_log = -std::numeric_limits<double>::infinity();
    double scaled_sum = 0.0;
    const double peak_product = 0.25 * x * x;  // terms grow while (k+1)(nu+k+1) < this
    for (int k = 0;; ++k) {
        const double lt = (nu + 2.0 * k) * log_half_x - std::lgamma(k + 1.0) -
                          std::lgamma(nu + k + 1.0);
        if (lt > max_log) {
            scaled_sum = scaled_sum * std::exp(max_log - lt) + 1.0;
            max_log = lt;
        } else {
            scaled_sum += std::exp(lt - max_log);
        }
        const bool past_peak = (k + 1.0) * (nu + k + 1.0) > peak_product;
        if (past_peak && lt < max_log - 45.0) break;
        if (k > 200000) throw NumericError("bessel series failed to converge");
    }
    return max_log + std::log(scaled_sum);
}

// Uniform large-order expansion, reparameterized in p = sqrt(nu^2 + x^2) so
// it remains well defined at nu = 0:
//   log I = p + nu log(x / (nu + p)) - log(2 pi p)/2 + log sum_k U_k,
//   U_k = s^k * sum_m c[k][k+2m] alpha^m,  s = 1/p,  alpha = (nu/p)^2.
double log_bessel_i_uniform(double nu, double x) {
    const double p = std::hypot(nu, x);
    const double s = 1.0 / p;
    const double alpha = (nu * s) * (nu * s);
    const auto& u = debye_polynomials();

    double sum = 1.0;
    double sk = 1.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (int k = 1; k < kUniformTerms; ++k) {
        sk *= s;
        const auto& c = u[k];
        double poly = 0.0;
        double am = 1.0;
        for (std::size_t j = k; j < c.size(); j += 2) {
            poly += c[j] * am;
            am *= alpha;
        }
        const double term = sk * poly;
        // Asymptotic series: term magnitudes wobble, so only a decisive
        // departure from the running minimum signals divergence.
        if (k >= 4 && std::abs(term) > 10.0 * min_abs) break;
        sum += term;
        min_abs = std::min(min_abs, std::abs(term));
    }
    return p + nu * std::log(x / (nu + p)) - 0.5 * std::log(2.0 * M_PI * p) +
           std::log(sum);
}

}  // namespace detail

double log_bessel_i(double nu, double x) {
    if (nu < 0.0 || x < 0.0 || !std::isfinite(nu) || !std::isfinite(x))
        throw NumericError("log_bessel_i requires finite nu >= 0, x >= 0");
    if (x == 0.0)
        return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (x < std::max(12.0, nu)) return detail::log_bessel_i_series(nu, x);
    return detail::log_bessel_i_uniform(nu, x);
}

double bessel_i_ratio(double nu, double x) {
    if (x == 0.0) return 0.0;
    return std::exp(log_bessel_i(nu + 1.0, x) - log_bessel_i(nu, x));
}

}  // namespace vmfkd
