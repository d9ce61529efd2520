#pragma once

// Test-only reference computations. Nothing here calls into the library's
// Gram assembly, eigensolver or projection code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "gpgd/linop.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>; // row-major, m[i][j]
using Vec = std::vector<double>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, Vec(c, 0.0)); }

inline Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Matrix m = zeros(r, c);
    for (auto& row : m)
        for (double& v : row) v = n(rng);
    return m;
}

inline Vec random_vector(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Vec v(d);
    for (double& e : v) e = n(rng);
    return v;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t = zeros(a.empty() ? 0 : a[0].size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    Matrix c = zeros(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i][p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) c[i][j] += aip * b[p][j];
        }
    return c;
}

inline Vec matvec(const Matrix& a, const Vec& x) {
    Vec y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

inline Matrix add_scaled(const Matrix& a, const Matrix& b, double s) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] += s * b[i][j];
    return c;
}

inline gpgd::DenseMatrix to_dense(const Matrix& a) {
    gpgd::DenseMatrix d(a.size(), a.empty() ? 0 : a[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) d(i, j) = a[i][j];
    return d;
}

/// Explicit matrix of a linear map, one column per basis vector.
inline Matrix explicit_matrix(const gpgd::LinearMap& A) {
    Matrix m = zeros(A.rows(), A.cols());
    gpgd::Vector e(A.cols(), 0.0);
    for (std::size_t j = 0; j < A.cols(); ++j) {
        e[j] = 1.0;
        const gpgd::Vector c = A.apply(e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < A.rows(); ++i) m[i][j] = c[i];
    }
    return m;
}

/// Matrix of the theta-shift: column (r, t) has its one at row (r, t + s).
inline Matrix theta_shift_matrix(std::size_t n_r, std::size_t n_theta, long s) {
    const std::size_t d = n_r * n_theta;
    Matrix p = zeros(d, d);
    const long nt = static_cast<long>(n_theta);
    for (std::size_t r = 0; r < n_r; ++r)
        for (std::size_t t = 0; t < n_theta; ++t) {
            const long dst = ((static_cast<long>(t) + s) % nt + nt) % nt;
            p[r * n_theta + static_cast<std::size_t>(dst)][r * n_theta + t] = 1.0;
        }
    return p;
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline Vec jacobi_eigenvalues(Matrix a, double tol = 1e-14, int max_sweeps = 100) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a[i][j] * a[i][j];
                if (i != j) off += a[i][j] * a[i][j];
            }
        if (off <= tol * tol * total) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p][q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Solves the square system a x = b by Gaussian elimination with partial pivoting.
inline Vec solve(Matrix a, Vec b) {
    const std::size_t n = a.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

inline double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline Vec sum(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

inline Vec difference(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vec scaled_copy(const Vec& a, double s) {
    Vec c(a);
    for (double& v : c) v *= s;
    return c;
}

inline double norm(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

} // namespace oracle
