#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpgd/errors.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

namespace gpgd {

/// Row-major dense matrix. Used for small operators and for oracle-grade
/// Gram assembly.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (entries_.size() != rows_ * cols_) {
            throw DimensionError("DenseMatrix: entries length must equal rows * cols");
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> entries() const noexcept { return entries_; }

    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    Vector multiply(std::span<const double> x) const {
        detail::require_dims(x.size(), cols_, "DenseMatrix::multiply");
        Vector y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            const double* row = entries_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vector transpose_multiply(std::span<const double> y) const {
        detail::require_dims(y.size(), rows_, "DenseMatrix::transpose_multiply");
        Vector x(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double* row = entries_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) x[j] += row[j] * y[i];
        }
        return x;
    }

    Vector column(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

/// Matrix-free linear operator R^cols -> R^rows with its adjoint.
///
/// Immutable once built; copies share the underlying closures.
class LinearMap {
public:
    using Action = std::function<Vector(std::span<const double>)>;

    LinearMap(std::size_t rows, std::size_t cols, Action forward, Action adjoint, std::string tag)
        : rows_(rows), cols_(cols), forward_(std::make_shared<const Action>(std::move(forward))),
          adjoint_(std::make_shared<const Action>(std::move(adjoint))), tag_(std::move(tag)) {}

    static LinearMap identity(std::size_t d) {
        auto copy = [](std::span<const double> x) { return Vector(x.begin(), x.end()); };
        return LinearMap(d, d, copy, copy, "identity(" + std::to_string(d) + ")");
    }

    static LinearMap from_dense(DenseMatrix m, std::string tag = "dense") {
        auto shared = std::make_shared<const DenseMatrix>(std::move(m));
        const std::size_t r = shared->rows();
        const std::size_t c = shared->cols();
        return LinearMap(
            r, c, [shared](std::span<const double> x) { return shared->multiply(x); },
            [shared](std::span<const double> y) { return shared->transpose_multiply(y); },
            std::move(tag));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const std::string& tag() const noexcept { return tag_; }

    Vector apply(std::span<const double> x) const {
        detail::require_dims(x.size(), cols_, ("apply[" + tag_ + "]").c_str());
        Vector y = (*forward_)(x);
        detail::require_dims(y.size(), rows_, ("forward output[" + tag_ + "]").c_str());
        return y;
    }

    Vector apply_adjoint(std::span<const double> y) const {
        detail::require_dims(y.size(), rows_, ("apply_adjoint[" + tag_ + "]").c_str());
        Vector x = (*adjoint_)(y);
        detail::require_dims(x.size(), cols_, ("adjoint output[" + tag_ + "]").c_str());
        return x;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::shared_ptr<const Action> forward_;
    std::shared_ptr<const Action> adjoint_;
    std::string tag_;
};

inline Vector apply(const LinearMap& A, std::span<const double> x) { return A.apply(x); }

/// x -> A(T x), adjoint y -> T^{-1}(A^T y).
inline LinearMap compose_with_action(const LinearMap& A, const GroupAction& T) {
    if (A.cols() != T.dimension()) {
        throw DimensionError("compose_with_action: operator has " + std::to_string(A.cols()) +
                             " columns but action dimension is " + std::to_string(T.dimension()));
    }
    auto action = std::make_shared<const GroupAction>(T);
    return LinearMap(
        A.rows(), A.cols(), [A, action](std::span<const double> x) { return A.apply(action->apply(x)); },
        [A, action](std::span<const double> y) { return action->apply_inverse(A.apply_adjoint(y)); },
        A.tag() + "*" + T.label());
}

/// Vertical stack of the operators, each block scaled by 1/sqrt(n), so that
/// ||A_stack v||^2 equals the mean of ||A_i v||^2.
inline LinearMap stack_mean(const std::vector<LinearMap>& ops) {
    if (ops.empty()) throw std::invalid_argument("stack_mean: empty operator list");
    const std::size_t cols = ops.front().cols();
    std::vector<std::size_t> offsets{0};
    for (const auto& op : ops) {
        if (op.cols() != cols) throw DimensionError("stack_mean: operators disagree on column count");
        offsets.push_back(offsets.back() + op.rows());
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(ops.size()));
    const std::size_t rows = offsets.back();
    auto blocks = std::make_shared<const std::vector<LinearMap>>(ops);
    auto offs = std::make_shared<const std::vector<std::size_t>>(std::move(offsets));

    auto forward = [blocks, offs, scale, rows](std::span<const double> x) {
        Vector y(rows);
        for (std::size_t b = 0; b < blocks->size(); ++b) {
            const Vector yb = (*blocks)[b].apply(x);
            for (std::size_t i = 0; i < yb.size(); ++i) y[(*offs)[b] + i] = scale * yb[i];
        }
        return y;
    };
    auto adjoint = [blocks, offs, scale, cols](std::span<const double> y) {
        Vector x(cols, 0.0);
        for (std::size_t b = 0; b < blocks->size(); ++b) {
            const auto& op = (*blocks)[b];
            const Vector xb = op.apply_adjoint(y.subspan((*offs)[b], op.rows()));
            for (std::size_t j = 0; j < cols; ++j) x[j] += scale * xb[j];
        }
        return x;
    };
    return LinearMap(rows, cols, forward, adjoint, "stack_mean[" + std::to_string(ops.size()) + "]");
}

struct SpectralEstimate {
    double value = 0.0;      ///< largest eigenvalue of A^T A (last estimate if not converged)
    std::size_t iterations = 0;
    bool converged = false;
};

/// Power iteration on A^T A from a seeded uniform start vector. Converged when
/// successive Rayleigh quotients differ by less than `tol` relatively.
inline SpectralEstimate spectral_norm(const LinearMap& A, double tol = 1e-12,
                                      std::size_t max_iter = 10000, std::uint64_t seed = 0) {
    if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");
    Rng rng(seed);
    Vector v(A.cols());
    for (double& e : v) e = 2.0 * uniform_unit(rng) - 1.0;

    SpectralEstimate est;
    double nv = norm2(v);
    if (nv == 0.0) {
        v.assign(v.size(), 1.0);
        nv = norm2(v);
    }
    for (double& e : v) e /= nv;

    double previous = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const Vector w = A.apply_adjoint(A.apply(v));
        const double rq = dot(v, w);
        const double nw = norm2(w);
        est.value = rq;
        est.iterations = it;
        if (nw == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        if (it > 1 && std::abs(rq - previous) < tol * std::abs(rq)) {
            est.converged = true;
            return est;
        }
        previous = rq;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
    }
    return est;
}

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// A^T A assembled column by column from basis vectors, then symmetrised.
inline DenseMatrix gram_dense(const LinearMap& A, std::size_t cap = kDefaultDenseCap) {
    const std::size_t n = A.cols();
    if (n > cap) {
        throw SizeError("gram_dense: " + std::to_string(n) + " columns exceeds dense cap " +
                        std::to_string(cap));
    }
    DenseMatrix G(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vector col = A.apply_adjoint(A.apply(e));
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) G(i, j) = col[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (G(i, j) + G(j, i));
            G(i, j) = s;
            G(j, i) = s;
        }
    }
    return G;
}

struct EigenPair {
    double value = 0.0;
    Vector vector;
};

/// Smallest eigenpair of a symmetric matrix.
inline EigenPair symmetric_min_eigenpair(const DenseMatrix& S) {
    if (S.rows() != S.cols()) throw DimensionError("symmetric_min_eigenpair: matrix not square");
    if (S.rows() == 0) throw std::invalid_argument("symmetric_min_eigenpair: empty matrix");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> m(S.entries().data(), static_cast<Eigen::Index>(S.rows()),
                                 static_cast<Eigen::Index>(S.cols()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric_min_eigenpair: eigensolver failed");
    EigenPair out;
    out.value = solver.eigenvalues()(0);
    out.vector.resize(S.rows());
    for (std::size_t i = 0; i < S.rows(); ++i) out.vector[i] = solver.eigenvectors()(static_cast<Eigen::Index>(i), 0);
    return out;
}

/// Eigenvalues only, ascending.
inline Vector symmetric_eigenvalues(const DenseMatrix& S) {
    if (S.rows() != S.cols()) throw DimensionError("symmetric_eigenvalues: matrix not square");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> m(S.entries().data(), static_cast<Eigen::Index>(S.rows()),
                                 static_cast<Eigen::Index>(S.cols()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric_eigenvalues: eigensolver failed");
    return Vector(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
}

} // namespace gpgd
