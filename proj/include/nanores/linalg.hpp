#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nanores/errors.hpp"

namespace nanores {

/// Dense symmetric positive definite solve via Cholesky, in place on a copy.
/// a is row-major d x d, b is d. Throws NumericalError when a pivot is not
/// positive.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                          std::size_t d) {
    if (a.size() != d * d || b.size() != d) throw ShapeError("cholesky_solve: bad dimensions");
    // factor: a becomes L in the lower triangle
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > 0.0))
            throw NumericalError("cholesky_solve: non-positive pivot at column " +
                                 std::to_string(j));
        const double ljj = std::sqrt(diag);
        a[j * d + j] = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double acc = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) acc -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = acc / ljj;
        }
    }
    // forward substitution L y = b
    for (std::size_t i = 0; i < d; ++i) {
        double acc = b[i];
        for (std::size_t k = 0; k < i; ++k) acc -= a[i * d + k] * b[k];
        b[i] = acc / a[i * d + i];
    }
    // back substitution L^T x = y
    for (std::size_t ii = d; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double acc = b[i];
        for (std::size_t k = i + 1; k < d; ++k) acc -= a[k * d + i] * b[k];
        b[i] = acc / a[i * d + i];
    }
    return b;
}

/// Largest eigenvalue of (1/n) X^T X by power iteration, computed matrix-free
/// from the n x d row-major data. Deterministic start vector.
inline double top_eigenvalue_gram(const std::vector<double>& x, std::size_t n, std::size_t d,
                                  int iters = 100) {
    if (n == 0 || d == 0) return 0.0;
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> xv(n, 0.0), w(d, 0.0);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = &x[i * d];
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * v[j];
            xv[i] = acc;
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &x[i * d];
            const double s = xv[i];
            for (std::size_t j = 0; j < d; ++j) w[j] += row[j] * s;
        }
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            w[j] /= static_cast<double>(n);
            norm += w[j] * w[j];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        double next = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            next += v[j] * w[j];
            v[j] = w[j] / norm;
        }
        if (it > 4 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::abs(lambda);
}

}  // namespace nanores
