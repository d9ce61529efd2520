#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gpgd/bench.hpp"
#include "gpgd/constraint.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/symmetry.hpp"
#include "oracles.hpp"

using namespace gpgd;
using namespace gpgd::bench;

namespace {

std::vector<std::size_t> all_angles(std::size_t n) {
    std::vector<std::size_t> s(n);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

double shift_mismatch(const Vector& x, std::size_t n_r, std::size_t n_t, long s) {
    return distance(polar_theta_shift(n_r, n_t, s).apply(x), x);
}

} // namespace

TEST(RingPhantom, ZeroProfileGivesZeroImage) {
    const Vector x = ring_phantom(4, 8, Vector(4, 0.0));
    EXPECT_EQ(x, Vector(32, 0.0));
}

TEST(RingPhantom, ShiftInvariantWithProfileMean) {
    const Vector profile{0.1, 0.9, 0.4, 0.0, 1.0};
    const Vector x = ring_phantom(5, 9, profile);
    for (long s = -9; s <= 9; ++s) EXPECT_EQ(shift_mismatch(x, 5, 9, s), 0.0);
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double mean_p = std::accumulate(profile.begin(), profile.end(), 0.0) / profile.size();
    EXPECT_NEAR(mean_x, mean_p, 1e-15);
}

TEST(RingPhantom, RejectsOutOfBoxProfile) {
    EXPECT_THROW(ring_phantom(2, 4, Vector{0.5, 1.2}), std::invalid_argument);
    EXPECT_THROW(ring_phantom(2, 4, Vector{-0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(ring_phantom(3, 4, Vector{0.5, 0.2}), DimensionError);
}

TEST(RingProfile, LevelInsideBand) {
    const Vector p = ring_profile(10, 0.4, 0.7, 0.1, 0.9);
    for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(p[r], (r >= 4 && r < 7) ? 0.9 : 0.1);
}

TEST(TexturedPhantom, SmoothnessOneIsShiftInvariant) {
    const Vector x = textured_phantom(6, 16, 1, 3);
    for (long s = 1; s < 16; ++s) EXPECT_LE(shift_mismatch(x, 6, 16, s), 1e-12);
}

TEST(TexturedPhantom, InBoxAndDeterministic) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Vector x = textured_phantom(16, 32, 5, seed);
        for (double v : x) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_EQ(x, textured_phantom(16, 32, 5, seed));
    }
    EXPECT_NE(textured_phantom(4, 8, 3, 1), textured_phantom(4, 8, 3, 2));
    EXPECT_THROW(textured_phantom(4, 8, 0, 1), std::invalid_argument);
}

TEST(TexturedPhantom, SmallShiftsMoveLess) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Vector x = textured_phantom(32, 64, 4, seed);
        const double m1 = shift_mismatch(x, 32, 64, 1);
        const double m2 = shift_mismatch(x, 32, 64, 2);
        EXPECT_GT(m1, 0.0);
        EXPECT_LE(m1, m2) << "seed " << seed;
    }
}

TEST(AngleSets, EvenlySpacedAndCovering) {
    EXPECT_EQ(evenly_spaced_angles(64, 0.25).size(), 16u);
    EXPECT_EQ(evenly_spaced_angles(64, 0.0625).size(), 4u);
    EXPECT_EQ(evenly_spaced_angles(8, 1.0), all_angles(8));
    EXPECT_EQ(covering_radius(evenly_spaced_angles(64, 0.25), 64), 2u);
    EXPECT_EQ(covering_radius(evenly_spaced_angles(64, 0.0625), 64), 8u);
    EXPECT_EQ(covering_radius(all_angles(5), 5), 0u);
    EXPECT_EQ(shifted_angles(std::vector<std::size_t>{0, 7}, 8, 2), (std::vector<std::size_t>{2, 1}));
    EXPECT_THROW(evenly_spaced_angles(8, 0.0), std::invalid_argument);
}

TEST(AngleSubsampledOperator, ShapeAndErrors) {
    const LinearMap A = angle_subsampled_operator(4, 12, {0, 3}, 5, 1);
    EXPECT_EQ(A.rows(), 10u);
    EXPECT_EQ(A.cols(), 48u);
    EXPECT_THROW(angle_subsampled_operator(4, 12, {}, 5, 1), std::invalid_argument);
    EXPECT_THROW(angle_subsampled_operator(4, 12, {12}, 5, 1), std::invalid_argument);
    EXPECT_THROW(angle_subsampled_operator(4, 12, {0}, 0, 1), std::invalid_argument);
}

TEST(AngleSubsampledOperator, FullAnglesGivePositiveDefiniteGram) {
    const std::size_t n_r = 6, n_t = 10;
    const LinearMap A = angle_subsampled_operator(n_r, n_t, all_angles(n_t), n_r, 4);
    const auto M = oracle::explicit_matrix(A);
    const auto ev = oracle::jacobi_eigenvalues(oracle::matmul(oracle::transpose(M), M));
    EXPECT_GT(ev.front(), 1e-6);
}

TEST(AngleSubsampledOperator, ShiftCovarianceIsExact) {
    const std::size_t n_r = 8, n_t = 24;
    for (double frac : {0.0625, 0.25, 0.5}) {
        const auto S = evenly_spaced_angles(n_t, frac);
        const LinearMap A = angle_subsampled_operator(n_r, n_t, S, 7, 11);
        for (long s = -static_cast<long>(n_t); s <= static_cast<long>(n_t); s += 5) {
            const LinearMap direct = angle_subsampled_operator(n_r, n_t, shifted_angles(S, n_t, s), 7, 11);
            const LinearMap composite = compose_with_action(A, polar_theta_shift(n_r, n_t, s));
            for (int t = 0; t < 50; ++t) {
                const Vector x = oracle::random_vector(n_r * n_t, 1000 * t + s + 100);
                ASSERT_EQ(composite.apply(x), direct.apply(x)) << "frac " << frac << " s " << s;
            }
        }
    }
}

TEST(AngleSubsampledOperator, NonnegativeOnNonnegativeImages) {
    const LinearMap A = angle_subsampled_operator(8, 16, {0, 5, 9}, 12, 2);
    const Vector y = A.apply(textured_phantom(8, 16, 3, 0));
    for (double v : y) EXPECT_GE(v, 0.0);
}

TEST(AddNoise, ZeroSigmaAndDeterminism) {
    const Vector clean = oracle::random_vector(30, 5);
    const Observation o = add_noise(clean, GaussianNoise{0.0}, 3);
    EXPECT_EQ(o.w, Vector(30, 0.0));
    EXPECT_EQ(o.b, clean);
    const Observation a = add_noise(clean, GaussianNoise{0.1}, 9);
    const Observation b = add_noise(clean, GaussianNoise{0.1}, 9);
    EXPECT_EQ(a.w, b.w);
    EXPECT_NE(a.w, add_noise(clean, GaussianNoise{0.1}, 10).w);
    for (std::size_t i = 0; i < clean.size(); ++i) EXPECT_EQ(a.b[i] - clean[i], a.w[i]);
}

TEST(AddNoise, PoissonLargeScaleIsSmall) {
    const LinearMap A = angle_subsampled_operator(32, 64, evenly_spaced_angles(64, 0.25), 44, 0);
    const Vector clean = A.apply(ring_phantom(32, 64, ring_profile(32, 0.4, 0.7, 0.1, 0.9)));
    const Observation o = add_noise(clean, PoissonNoise{1e8}, 1);
    EXPECT_LT(norm2(o.w) / norm2(clean), 1e-3);
    EXPECT_GT(norm2(o.w), 0.0);
    EXPECT_EQ(o.w, add_noise(clean, PoissonNoise{1e8}, 1).w);
}

TEST(AddNoise, PoissonRejectsNegativeAndBadParameters) {
    EXPECT_THROW(add_noise(Vector{1.0, -0.5}, PoissonNoise{10.0}, 0), std::invalid_argument);
    EXPECT_THROW(add_noise(Vector{1.0}, PoissonNoise{0.0}, 0), std::invalid_argument);
    EXPECT_THROW(add_noise(Vector{1.0}, GaussianNoise{-1.0}, 0), std::invalid_argument);
}

TEST(BuildProblem, StoresNoiseExactly) {
    ProblemSpec spec;
    spec.n_r = 8;
    spec.n_theta = 16;
    spec.rays_per_angle = 8;
    spec.noise = GaussianNoise{0.05};
    spec.noise_seed = 4;
    const ProblemInstance p = build_problem(spec);
    const Vector Ax = p.A.apply(p.x_dagger);
    for (std::size_t i = 0; i < p.b.size(); ++i) EXPECT_EQ(p.w[i], p.b[i] - Ax[i]);
    EXPECT_TRUE(p.K.contains(p.x_dagger));
    ASSERT_TRUE(p.geometry.has_value());
    EXPECT_EQ(p.geometry->angles, evenly_spaced_angles(16, 0.25));
}

TEST(BuildProblem, FullAnglesRingHasPositiveMuC) {
    ProblemSpec spec;
    spec.n_r = 6;
    spec.n_theta = 12;
    spec.angle_fraction = 1.0;
    spec.rays_per_angle = 6;
    const ProblemInstance p = build_problem(spec);
    const DescentCone C = descent_cone_of(p.K, p.x_dagger);
    ASSERT_TRUE(C.is_whole_space());
    const auto M = oracle::explicit_matrix(p.A);
    const double oracle_min = oracle::jacobi_eigenvalues(oracle::matmul(oracle::transpose(M), M)).front();
    const RestrictedEig mu = restricted_min_eig(p.A, C);
    EXPECT_GT(mu.value, 0.0);
    EXPECT_NEAR(mu.value, oracle_min, 1e-9);
}

TEST(BuildProblem, MeasurementRegimes) {
    ProblemSpec sparse;
    sparse.angle_fraction = 0.0625;
    sparse.rays_per_angle = 32;
    const ProblemInstance p6 = build_problem(sparse);
    EXPECT_NEAR(static_cast<double>(p6.A.rows()) / p6.A.cols(), 0.06, 0.01);
    EXPECT_EQ(restricted_min_eig(p6.A, DescentCone::whole_space(p6.dimension())).value, 0.0);

    ProblemSpec moderate;
    moderate.rays_per_angle = 44;
    const ProblemInstance p34 = build_problem(moderate);
    EXPECT_NEAR(static_cast<double>(p34.A.rows()) / p34.A.cols(), 0.34, 0.01);
}

TEST(BuildProblem, FullCoverageSubsetHasPositiveMuG) {
    ProblemSpec spec;
    spec.n_r = 4;
    spec.n_theta = 16;
    spec.rays_per_angle = 4;
    const ProblemInstance p = build_problem(spec);
    const std::size_t radius = covering_radius(p.geometry->angles, 16);
    const SymmetricSubset sub(theta_generator(p), radius);
    std::vector<LinearMap> blocks;
    for (const auto& g : sub) blocks.push_back(compose_with_action(p.A, g));
    const auto M = oracle::explicit_matrix(stack_mean(blocks));
    const double oracle_min = oracle::jacobi_eigenvalues(oracle::matmul(oracle::transpose(M), M)).front();
    EXPECT_GT(oracle_min, 1e-8);
    EXPECT_NEAR(restricted_min_eig(stack_mean(blocks), DescentCone::whole_space(64)).value, oracle_min, 1e-9);
}
