#include "vmfkd/kernels.hpp"

// Reference kernels. Plain ascending-index loops; these define the exact
// summation order the SIMD variants are tested against.

namespace vmfkd::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv_n_scalar(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(a + i * n, x, n);
}

void gemv_t_scalar(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(x[i], a + i * n, y, n);
}

void ger_scalar(double alpha, const double* x, std::size_t m, const double* y,
                std::size_t n, double* a) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(alpha * x[i], y, a + i * n, n);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar",      dot_scalar,    axpy_scalar,
        scal_scalar,   gemv_n_scalar, gemv_t_scalar,
        ger_scalar,
    };
    return table;
}

}  // namespace vmfkd::kernels
