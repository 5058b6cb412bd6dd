#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops behind every hot path (network
// forward/backward, Monte Carlo batches, quadrature sums). A scalar
// reference implementation always exists; AVX2/NEON variants are compiled
// when the target supports them and selected at runtime after a CPU check.
// The variants are equivalence-tested against the scalar kernels.

namespace vmfkd::kernels {

struct KernelTable {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scal)(double alpha, double* x, std::size_t n);
    // y = A x, A row-major m x n, x of length n, y of length m
    void (*gemv_n)(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y);
    // y = A^T x, A row-major m x n, x of length m, y of length n
    void (*gemv_t)(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y);
    // A += alpha * x y^T, A row-major m x n
    void (*ger)(double alpha, const double* x, std::size_t m, const double* y,
                std::size_t n, double* a);
};

const KernelTable& scalar_table();

// Defined only on targets where the variant is compiled in; returns nullptr
// when the running CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Active backend. Defaults to the best runtime-supported variant; the
// VMFKD_KERNELS environment variable (scalar|avx2|neon) overrides it.
const KernelTable& active();
// Force a backend by name; returns false if unavailable on this machine.
bool select(std::string_view name);
const char* backend_name();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void scal(double alpha, double* x, std::size_t n) {
    active().scal(alpha, x, n);
}
inline void gemv_n(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y) {
    active().gemv_n(a, m, n, x, y);
}
inline void gemv_t(const double* a, std::size_t m, std::size_t n,
                   const double* x, double* y) {
    active().gemv_t(a, m, n, x, y);
}
inline void ger(double alpha, const double* x, std::size_t m, const double* y,
                std::size_t n, double* a) {
    active().ger(alpha, x, m, y, n, a);
}

}  // namespace vmfkd::kernels
