#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gpgd/errors.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

namespace gpgd {

enum class Exactness { exact, estimate };

inline const char* to_string(Exactness e) { return e == Exactness::exact ? "exact" : "estimate"; }

inline Exactness combine(Exactness a, Exactness b) {
    return (a == Exactness::exact && b == Exactness::exact) ? Exactness::exact : Exactness::estimate;
}

struct BoxSet {
    Vector lo;
    Vector hi;
};
struct NonnegSet {};
struct L1BallSet {
    double radius;
};
/// Linear subspace spanned by the orthonormal columns of `basis` (d x k).
struct SubspaceSet {
    DenseMatrix basis;
};

/// Closed convex constraint set with an exact Euclidean projection.
class ConstraintSet {
public:
    using Kind = std::variant<BoxSet, NonnegSet, L1BallSet, SubspaceSet>;

    static ConstraintSet box(Vector lo, Vector hi) {
        detail::require_dims(hi.size(), lo.size(), "ConstraintSet::box");
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!(lo[i] < hi[i])) throw std::invalid_argument("ConstraintSet::box: requires lo < hi");
        }
        const std::size_t d = lo.size();
        return ConstraintSet(BoxSet{std::move(lo), std::move(hi)}, d);
    }
    static ConstraintSet box(std::size_t d, double lo, double hi) {
        return box(Vector(d, lo), Vector(d, hi));
    }
    static ConstraintSet nonneg(std::size_t d) { return ConstraintSet(NonnegSet{}, d); }
    static ConstraintSet l1_ball(std::size_t d, double radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("ConstraintSet::l1_ball: radius must be positive");
        return ConstraintSet(L1BallSet{radius}, d);
    }
    static ConstraintSet subspace(DenseMatrix basis) {
        const std::size_t d = basis.rows();
        const std::size_t k = basis.cols();
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a; b < k; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += basis(i, a) * basis(i, b);
                if (std::abs(s - (a == b ? 1.0 : 0.0)) > 1e-12) {
                    throw std::invalid_argument("ConstraintSet::subspace: basis is not orthonormal");
                }
            }
        }
        return ConstraintSet(SubspaceSet{std::move(basis)}, d);
    }

    std::size_t dimension() const noexcept { return dimension_; }
    const Kind& kind() const noexcept { return kind_; }
    bool is_convex() const noexcept { return true; }
    /// Contraction constant of the projection identities; 1 for every convex set.
    int kappa_c() const noexcept { return is_convex() ? 1 : 2; }

    bool contains(std::span<const double> x, double tol = 1e-10) const;

private:
    ConstraintSet(Kind kind, std::size_t dimension) : kind_(std::move(kind)), dimension_(dimension) {}

    Kind kind_;
    std::size_t dimension_;
};

namespace detail {

inline Vector project_l1(std::span<const double> x, double radius) {
    double l1 = 0.0;
    for (double v : x) l1 += std::abs(v);
    if (l1 <= radius) return Vector(x.begin(), x.end());

    // Sort-and-threshold; ties broken by index through stable_sort.
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(x[a]) > std::abs(x[b]); });
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        const double u = std::abs(x[order[j]]);
        cumulative += u;
        const double t = (cumulative - radius) / static_cast<double>(j + 1);
        if (u - t > 0.0) theta = t;
        else break;
    }
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = std::max(std::abs(x[i]) - theta, 0.0);
        out[i] = std::copysign(m, x[i]);
        if (m == 0.0) out[i] = 0.0;
    }
    return out;
}

inline Vector project_subspace(const DenseMatrix& basis, std::span<const double> x) {
    return basis.multiply(basis.transpose_multiply(x));
}

} // namespace detail

/// Euclidean projection onto K.
inline Vector project(const ConstraintSet& K, std::span<const double> x) {
    detail::require_dims(x.size(), K.dimension(), "project");
    return std::visit(
        [&](const auto& set) -> Vector {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, BoxSet>) {
                Vector out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], set.lo[i], set.hi[i]);
                return out;
            } else if constexpr (std::is_same_v<T, NonnegSet>) {
                Vector out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < 0.0 ? 0.0 : x[i];
                return out;
            } else if constexpr (std::is_same_v<T, L1BallSet>) {
                return detail::project_l1(x, set.radius);
            } else {
                return detail::project_subspace(set.basis, x);
            }
        },
        K.kind());
}

inline bool ConstraintSet::contains(std::span<const double> x, double tol) const {
    if (x.size() != dimension_) return false;
    return std::visit(
        [&](const auto& set) -> bool {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, BoxSet>) {
                for (std::size_t i = 0; i < x.size(); ++i)
                    if (x[i] < set.lo[i] - tol || x[i] > set.hi[i] + tol) return false;
                return true;
            } else if constexpr (std::is_same_v<T, NonnegSet>) {
                for (double v : x)
                    if (v < -tol) return false;
                return true;
            } else if constexpr (std::is_same_v<T, L1BallSet>) {
                double l1 = 0.0;
                for (double v : x) l1 += std::abs(v);
                return l1 <= set.radius + tol;
            } else {
                return distance(detail::project_subspace(set.basis, x), x) <= tol;
            }
        },
        kind_);
}

struct WholeSpaceCone {};
struct SubspaceCone {
    DenseMatrix basis; ///< orthonormal columns
};
/// Finite set of unit feasible directions; an inner approximation of the cone.
struct SampledCone {
    std::vector<Vector> generators;
};

/// Descent cone {a (x - anchor) : a >= 0, x in K}.
class DescentCone {
public:
    using Representation = std::variant<WholeSpaceCone, SubspaceCone, SampledCone>;

    DescentCone(Vector anchor, Representation rep) : anchor_(std::move(anchor)), rep_(std::move(rep)) {}

    static DescentCone whole_space(std::size_t d) { return DescentCone(Vector(d, 0.0), WholeSpaceCone{}); }

    std::size_t dimension() const noexcept { return anchor_.size(); }
    const Vector& anchor() const noexcept { return anchor_; }
    const Representation& representation() const noexcept { return rep_; }

    Exactness exactness() const noexcept {
        return std::holds_alternative<SampledCone>(rep_) ? Exactness::estimate : Exactness::exact;
    }
    bool is_whole_space() const noexcept { return std::holds_alternative<WholeSpaceCone>(rep_); }

private:
    Vector anchor_;
    Representation rep_;
};

/// Projection onto the cone. Sampled cones return the best nonnegatively
/// scaled generator, which is only an approximation of the true projection.
inline Vector project_cone(const DescentCone& C, std::span<const double> x) {
    detail::require_dims(x.size(), C.dimension(), "project_cone");
    return std::visit(
        [&](const auto& rep) -> Vector {
            using T = std::decay_t<decltype(rep)>;
            if constexpr (std::is_same_v<T, WholeSpaceCone>) {
                return Vector(x.begin(), x.end());
            } else if constexpr (std::is_same_v<T, SubspaceCone>) {
                return detail::project_subspace(rep.basis, x);
            } else {
                double best = 0.0;
                const Vector* arg = nullptr;
                for (const auto& g : rep.generators) {
                    const double s = dot(g, x);
                    if (s > best) {
                        best = s;
                        arg = &g;
                    }
                }
                if (arg == nullptr) return Vector(x.size(), 0.0);
                return scaled(*arg, best);
            }
        },
        C.representation());
}

struct ConeSamplingOptions {
    std::size_t random_directions = 64;
    std::uint64_t seed = 0;
};

inline constexpr double kAnchorTolerance = 1e-10;

/// Descent cone of K at `anchor`. Exact for interior anchors and subspaces;
/// boundary anchors of boxes, the nonnegative orthant and the l1 ball get a
/// sampled representation.
inline DescentCone descent_cone_of(const ConstraintSet& K, std::span<const double> anchor,
                                   const ConeSamplingOptions& opts = {}) {
    detail::require_dims(anchor.size(), K.dimension(), "descent_cone_of");
    if (!K.contains(anchor, kAnchorTolerance)) {
        throw std::invalid_argument("descent_cone_of: anchor lies outside the constraint set");
    }
    const std::size_t d = anchor.size();
    Vector a(anchor.begin(), anchor.end());
    Rng rng(opts.seed);

    auto add_direction = [](std::vector<Vector>& gens, Vector v) {
        const double n = norm2(v);
        if (n > 0.0) {
            for (double& e : v) e /= n;
            gens.push_back(std::move(v));
        }
    };

    return std::visit(
        [&](const auto& set) -> DescentCone {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, SubspaceSet>) {
                return DescentCone(a, SubspaceCone{set.basis});
            } else if constexpr (std::is_same_v<T, L1BallSet>) {
                double l1 = 0.0;
                for (double v : a) l1 += std::abs(v);
                if (l1 < set.radius) return DescentCone(a, WholeSpaceCone{});
                std::vector<Vector> gens;
                for (std::size_t i = 0; i < d; ++i) {
                    for (double sgn : {1.0, -1.0}) {
                        Vector v = scaled(a, -1.0);
                        v[i] += sgn * set.radius;
                        add_direction(gens, std::move(v));
                    }
                }
                std::normal_distribution<double> normal;
                for (std::size_t s = 0; s < opts.random_directions; ++s) {
                    Vector y(d);
                    double yl1 = 0.0;
                    for (double& e : y) {
                        e = normal(rng);
                        yl1 += std::abs(e);
                    }
                    const double target = set.radius * uniform_unit(rng);
                    for (std::size_t i = 0; i < d; ++i) y[i] = y[i] * target / yl1 - a[i];
                    add_direction(gens, std::move(y));
                }
                return DescentCone(a, SampledCone{std::move(gens)});
            } else {
                Vector lo, hi;
                if constexpr (std::is_same_v<T, BoxSet>) {
                    lo = set.lo;
                    hi = set.hi;
                } else {
                    lo.assign(d, 0.0);
                    hi.assign(d, std::numeric_limits<double>::infinity());
                }
                bool interior = true;
                for (std::size_t i = 0; i < d; ++i)
                    if (!(lo[i] < a[i] && a[i] < hi[i])) interior = false;
                if (interior) return DescentCone(a, WholeSpaceCone{});

                std::vector<Vector> gens;
                for (std::size_t i = 0; i < d; ++i) {
                    if (a[i] < hi[i]) {
                        Vector v(d, 0.0);
                        v[i] = 1.0;
                        gens.push_back(std::move(v));
                    }
                    if (a[i] > lo[i]) {
                        Vector v(d, 0.0);
                        v[i] = -1.0;
                        gens.push_back(std::move(v));
                    }
                }
                for (std::size_t s = 0; s < opts.random_directions; ++s) {
                    Vector y(d);
                    for (std::size_t i = 0; i < d; ++i) {
                        const double upper = std::isfinite(hi[i]) ? hi[i] : 2.0 * std::abs(a[i]) + 1.0;
                        y[i] = lo[i] + (upper - lo[i]) * uniform_unit(rng) - a[i];
                    }
                    add_direction(gens, std::move(y));
                }
                return DescentCone(a, SampledCone{std::move(gens)});
            }
        },
        K.kind());
}

struct RestrictedEig {
    double value = 0.0;
    Exactness exactness = Exactness::exact;
};

struct RestrictedEigPair {
    double value = 0.0;
    Vector vector; ///< unit minimiser in R^d, inside the cone
    Exactness exactness = Exactness::exact;
};

namespace detail {

/// (A B)^T (A B) for orthonormal B.
inline DenseMatrix restricted_gram(const LinearMap& A, const DenseMatrix& B) {
    const std::size_t k = B.cols();
    std::vector<Vector> images;
    images.reserve(k);
    for (std::size_t j = 0; j < k; ++j) images.push_back(A.apply(B.column(j)));
    DenseMatrix M(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            const double s = dot(images[a], images[b]);
            M(a, b) = s;
            M(b, a) = s;
        }
    }
    return M;
}

} // namespace detail

/// Smallest value of ||A v||^2 over unit vectors v of the cone, with its minimiser.
inline RestrictedEigPair restricted_min_eigenpair(const LinearMap& A, const DescentCone& C,
                                                  std::size_t cap = kDefaultDenseCap) {
    detail::require_dims(C.dimension(), A.cols(), "restricted_min_eig");
    if (A.cols() > cap) {
        throw SizeError("restricted_min_eig: " + std::to_string(A.cols()) + " columns exceeds dense cap " +
                        std::to_string(cap));
    }
    return std::visit(
        [&](const auto& rep) -> RestrictedEigPair {
            using T = std::decay_t<decltype(rep)>;
            if constexpr (std::is_same_v<T, WholeSpaceCone>) {
                EigenPair p = symmetric_min_eigenpair(gram_dense(A, cap));
                return {std::max(p.value, 0.0), std::move(p.vector), Exactness::exact};
            } else if constexpr (std::is_same_v<T, SubspaceCone>) {
                EigenPair p = symmetric_min_eigenpair(detail::restricted_gram(A, rep.basis));
                return {std::max(p.value, 0.0), rep.basis.multiply(p.vector), Exactness::exact};
            } else {
                RestrictedEigPair best{std::numeric_limits<double>::infinity(), {}, Exactness::estimate};
                for (const auto& g : rep.generators) {
                    const Vector Ag = A.apply(g);
                    const double q = dot(Ag, Ag) / dot(g, g);
                    if (q < best.value) {
                        best.value = q;
                        best.vector = g;
                    }
                }
                if (rep.generators.empty()) best.value = 0.0;
                return best;
            }
        },
        C.representation());
}

/// Smallest restricted eigenvalue of A^T A over the cone. Sampled cones give
/// the minimum over generators, an upper estimate flagged as such.
inline RestrictedEig restricted_min_eig(const LinearMap& A, const DescentCone& C,
                                        std::size_t cap = kDefaultDenseCap) {
    detail::require_dims(C.dimension(), A.cols(), "restricted_min_eig");
    if (A.cols() > cap) {
        throw SizeError("restricted_min_eig: " + std::to_string(A.cols()) + " columns exceeds dense cap " +
                        std::to_string(cap));
    }
    if (C.is_whole_space()) {
        // rank(A^T A) <= rows < cols
        if (A.rows() < A.cols()) return {0.0, Exactness::exact};
        const Vector eig = symmetric_eigenvalues(gram_dense(A, cap));
        return {std::max(eig.front(), 0.0), Exactness::exact};
    }
    const RestrictedEigPair p = restricted_min_eigenpair(A, C, cap);
    return {p.value, p.exactness};
}

} // namespace gpgd
