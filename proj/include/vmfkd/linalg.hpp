#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vmfkd/kernels.hpp"

namespace vmfkd {

// Row-major dense matrix. All heavy loops go through the kernels layer.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::span<const double> row_span(std::size_t r) const {
        return {row(r), cols};
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    return kernels::dot(a.data(), b.data(), a.size());
}

inline double norm(std::span<const double> v) {
    return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

// y = A x
inline void matvec(const Matrix& a, std::span<const double> x,
                   std::span<double> y) {
    kernels::gemv_n(a.data.data(), a.rows, a.cols, x.data(), y.data());
}

// y = A^T x
inline void matvec_t(const Matrix& a, std::span<const double> x,
                     std::span<double> y) {
    kernels::gemv_t(a.data.data(), a.rows, a.cols, x.data(), y.data());
}

// A += alpha x y^T
inline void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                         std::span<const double> y) {
    kernels::ger(alpha, x.data(), a.rows, y.data(), a.cols, a.data.data());
}

}  // namespace vmfkd
