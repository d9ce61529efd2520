#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gpgd/constraint.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

namespace gpgd {

/// Polar sensing layout: which views were measured and how.
struct PolarGeometry {
    std::size_t n_r = 0;
    std::size_t n_theta = 0;
    std::vector<std::size_t> angles;
    std::size_t rays_per_angle = 0;
};

/// b = A x_dagger + w, with the noise stored as w = b - A x_dagger.
struct ProblemInstance {
    Vector x_dagger;
    LinearMap A;
    Vector b;
    Vector w;
    ConstraintSet K;
    std::optional<PolarGeometry> geometry;

    std::size_t dimension() const noexcept { return x_dagger.size(); }
};

inline ProblemInstance make_problem(Vector x_dagger, LinearMap A, Vector b, ConstraintSet K,
                                    std::optional<PolarGeometry> geometry = std::nullopt) {
    detail::require_dims(x_dagger.size(), A.cols(), "make_problem: ground truth");
    detail::require_dims(b.size(), A.rows(), "make_problem: observation");
    detail::require_dims(K.dimension(), A.cols(), "make_problem: constraint set");
    if (!K.contains(x_dagger, kAnchorTolerance)) {
        throw std::invalid_argument("make_problem: ground truth lies outside the constraint set");
    }
    Vector w = subtract(b, A.apply(x_dagger));
    return ProblemInstance{std::move(x_dagger), std::move(A), std::move(b), std::move(w), std::move(K),
                           std::move(geometry)};
}

/// Unit theta-shift on the problem's polar grid.
inline GroupAction theta_generator(const ProblemInstance& problem) {
    if (!problem.geometry) throw std::invalid_argument("theta_generator: problem has no polar geometry");
    return polar_theta_shift(problem.geometry->n_r, problem.geometry->n_theta, 1);
}

} // namespace gpgd
