// NEON kernel variants for aarch64 (2 x f64 lanes). Baseline on that target,
// so no runtime feature probe is needed.

#include "vmfkd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace vmfkd::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2)
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void gemv_n_neon(const double* a, std::size_t m, std::size_t n,
                 const double* x, double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_neon(a + i * n, x, n);
}

void gemv_t_neon(const double* a, std::size_t m, std::size_t n,
                 const double* x, double* y) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) axpy_neon(x[i], a + i * n, y, n);
}

void ger_neon(double alpha, const double* x, std::size_t m, const double* y,
              std::size_t n, double* a) {
    for (std::size_t i = 0; i < m; ++i) axpy_neon(alpha * x[i], y, a + i * n, n);
}

const KernelTable neon_kernels{
    "neon",      dot_neon,    axpy_neon, scal_neon,
    gemv_n_neon, gemv_t_neon, ger_neon,
};

}  // namespace

const KernelTable* neon_table() { return &neon_kernels; }

}  // namespace vmfkd::kernels

#endif  // __aarch64__
