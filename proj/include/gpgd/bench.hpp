#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gpgd/constraint.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/problem.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

/// Desk-scale test problems on a polar grid.
namespace gpgd::bench {

/// Radial profile: `level` on [inner, outer) * n_r, `background` elsewhere.
inline Vector ring_profile(std::size_t n_r, double inner, double outer, double background, double level) {
    Vector p(n_r, background);
    for (std::size_t r = 0; r < n_r; ++r) {
        const double rel = static_cast<double>(r) / static_cast<double>(n_r);
        if (rel >= inner && rel < outer) p[r] = level;
    }
    return p;
}

/// x(r, theta) = profile(r); invariant under every theta-shift.
inline Vector ring_phantom(std::size_t n_r, std::size_t n_theta, std::span<const double> profile) {
    detail::require_dims(profile.size(), n_r, "ring_phantom: profile");
    for (double v : profile) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ring_phantom: profile values must lie in [0,1]");
    }
    Vector x(n_r * n_theta);
    for (std::size_t r = 0; r < n_r; ++r)
        for (std::size_t t = 0; t < n_theta; ++t) x[r * n_theta + t] = profile[r];
    return x;
}

/// Random image band-limited in theta: only harmonics k < smoothness (and
/// k <= n_theta / 2) are present. Values stay inside [0.05, 0.95].
inline Vector textured_phantom(std::size_t n_r, std::size_t n_theta, std::size_t smoothness, std::uint64_t seed) {
    if (smoothness < 1) throw std::invalid_argument("textured_phantom: smoothness must be >= 1");
    Rng rng(seed);
    const std::size_t harmonics = std::min(smoothness - 1, n_theta / 2);
    Vector x(n_r * n_theta);
    std::vector<double> amp(harmonics), phase(harmonics);
    for (std::size_t r = 0; r < n_r; ++r) {
        const double base = 0.3 + 0.4 * uniform_unit(rng);
        double total = 0.0;
        for (std::size_t k = 0; k < harmonics; ++k) {
            amp[k] = uniform_unit(rng) / static_cast<double>(k + 1);
            phase[k] = 2.0 * std::numbers::pi * uniform_unit(rng);
            total += amp[k];
        }
        // sum of amplitudes <= 0.25 keeps every pixel in [0.05, 0.95]
        const double budget = 0.25 * (0.5 + 0.5 * uniform_unit(rng));
        for (std::size_t t = 0; t < n_theta; ++t) {
            double v = base;
            for (std::size_t k = 0; k < harmonics; ++k) {
                const double angle = 2.0 * std::numbers::pi * static_cast<double>((k + 1) * t) /
                                     static_cast<double>(n_theta);
                v += budget * amp[k] / total * std::cos(angle + phase[k]);
            }
            x[r * n_theta + t] = v;
        }
    }
    return x;
}

/// ceil(fraction * n_theta) views spread evenly over the circle.
inline std::vector<std::size_t> evenly_spaced_angles(std::size_t n_theta, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("evenly_spaced_angles: fraction must lie in (0, 1]");
    }
    const auto count = std::max<std::size_t>(
        1, std::min<std::size_t>(n_theta, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_theta) - 1e-9))));
    std::vector<std::size_t> s(count);
    for (std::size_t j = 0; j < count; ++j) s[j] = j * n_theta / count;
    return s;
}

/// Angles measured by A T_s, i.e. {v + s mod n_theta}, in the same order.
inline std::vector<std::size_t> shifted_angles(std::span<const std::size_t> angles, std::size_t n_theta,
                                               std::int64_t s) {
    std::vector<std::size_t> out(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i)
        out[i] = detail::positive_mod(static_cast<std::int64_t>(angles[i]) + s, n_theta);
    return out;
}

/// Smallest m with the union of (S + s), |s| <= m, covering every angle.
inline std::size_t covering_radius(std::span<const std::size_t> angles, std::size_t n_theta) {
    if (angles.empty()) throw std::invalid_argument("covering_radius: empty angle set");
    std::size_t worst = 0;
    for (std::size_t t = 0; t < n_theta; ++t) {
        std::size_t best = n_theta;
        for (std::size_t v : angles) {
            const std::size_t fwd = (t + n_theta - v % n_theta) % n_theta;
            best = std::min({best, fwd, n_theta - fwd});
        }
        worst = std::max(worst, best);
    }
    return worst;
}

namespace detail {

/// Seeded ray weights shared by every view, so that views differ only by
/// which angular column they read.
struct RayWeights {
    std::size_t rays = 0;
    std::size_t n_r = 0;
    std::vector<double> mixing;        ///< rays x n_r, row-major, nonnegative
    std::array<double, 3> angular{};   ///< taps at offsets -1, 0, +1
};

inline RayWeights make_ray_weights(std::size_t n_r, std::size_t rays, std::uint64_t seed) {
    Rng rng(seed);
    RayWeights w;
    w.rays = rays;
    w.n_r = n_r;
    w.angular = {0.05 + 0.15 * uniform_unit(rng), 1.0, 0.05 + 0.15 * uniform_unit(rng)};
    w.mixing.assign(rays * n_r, 0.0);
    const double extra_scale = std::sqrt(3.0 / static_cast<double>(n_r));
    for (std::size_t j = 0; j < rays; ++j) {
        for (std::size_t r = 0; r < n_r; ++r) {
            const double u = uniform_unit(rng);
            w.mixing[j * n_r + r] = j < n_r ? (j == r ? 1.0 : 0.0) + 0.01 * u : extra_scale * u;
        }
    }
    return w;
}

} // namespace detail

/// Angle-subsampled sensing operator on an n_r x n_theta polar image.
///
/// Each view v in `angles` emits `rays_per_angle` measurements. A view reads
/// the radial columns at polar angles c - 1, c, c + 1 with c = -v mod n_theta,
/// blends them with fixed angular taps, then mixes the radial samples with a
/// fixed nonnegative ray matrix. Views rotate against the image coordinate, so
/// the operator for angles S + s equals A_S composed with the theta-shift by s,
/// bit for bit.
inline LinearMap angle_subsampled_operator(std::size_t n_r, std::size_t n_theta, std::vector<std::size_t> angles,
                                           std::size_t rays_per_angle, std::uint64_t seed) {
    if (angles.empty()) throw std::invalid_argument("angle_subsampled_operator: empty angle set");
    if (n_r < 1 || n_theta < 1) throw std::invalid_argument("angle_subsampled_operator: empty grid");
    if (rays_per_angle < 1) throw std::invalid_argument("angle_subsampled_operator: rays_per_angle must be >= 1");
    for (std::size_t v : angles) {
        if (v >= n_theta) throw std::invalid_argument("angle_subsampled_operator: angle index out of range");
    }
    auto weights = std::make_shared<const detail::RayWeights>(detail::make_ray_weights(n_r, rays_per_angle, seed));
    auto views = std::make_shared<const std::vector<std::size_t>>(std::move(angles));
    const std::size_t rows = views->size() * rays_per_angle;
    const std::size_t cols = n_r * n_theta;

    auto column_of = [n_theta](std::size_t v, int offset) {
        const std::size_t center = (n_theta - v) % n_theta;
        return static_cast<std::size_t>(static_cast<std::int64_t>(center + n_theta) + offset) % n_theta;
    };

    auto forward = [weights, views, n_r, n_theta, rows, column_of](std::span<const double> x) {
        Vector y(rows);
        Vector blended(n_r);
        const auto& w = *weights;
        for (std::size_t p = 0; p < views->size(); ++p) {
            const std::size_t left = column_of((*views)[p], -1);
            const std::size_t mid = column_of((*views)[p], 0);
            const std::size_t right = column_of((*views)[p], 1);
            for (std::size_t r = 0; r < n_r; ++r) {
                const double* ring = x.data() + r * n_theta;
                blended[r] = w.angular[0] * ring[left] + w.angular[1] * ring[mid] + w.angular[2] * ring[right];
            }
            for (std::size_t j = 0; j < w.rays; ++j) {
                double s = 0.0;
                const double* mix = w.mixing.data() + j * n_r;
                for (std::size_t r = 0; r < n_r; ++r) s += mix[r] * blended[r];
                y[p * w.rays + j] = s;
            }
        }
        return y;
    };

    auto adjoint = [weights, views, n_r, n_theta, cols, column_of](std::span<const double> y) {
        Vector x(cols, 0.0);
        Vector radial(n_r);
        const auto& w = *weights;
        for (std::size_t p = 0; p < views->size(); ++p) {
            std::fill(radial.begin(), radial.end(), 0.0);
            for (std::size_t j = 0; j < w.rays; ++j) {
                const double yj = y[p * w.rays + j];
                const double* mix = w.mixing.data() + j * n_r;
                for (std::size_t r = 0; r < n_r; ++r) radial[r] += mix[r] * yj;
            }
            const std::size_t left = column_of((*views)[p], -1);
            const std::size_t mid = column_of((*views)[p], 0);
            const std::size_t right = column_of((*views)[p], 1);
            for (std::size_t r = 0; r < n_r; ++r) {
                double* ring = x.data() + r * n_theta;
                ring[left] += w.angular[0] * radial[r];
                ring[mid] += w.angular[1] * radial[r];
                ring[right] += w.angular[2] * radial[r];
            }
        }
        return x;
    };

    return LinearMap(rows, cols, forward, adjoint,
                     "polar_views[" + std::to_string(views->size()) + "x" + std::to_string(rays_per_angle) + "]");
}

struct GaussianNoise {
    double sigma = 0.0;
};
struct PoissonNoise {
    double scale = 1.0; ///< counts per unit of measurement
};
using NoiseModel = std::variant<GaussianNoise, PoissonNoise>;

struct Observation {
    Vector b;
    Vector w; ///< b - clean
};

inline Observation add_noise(std::span<const double> clean, const NoiseModel& model, std::uint64_t seed) {
    Rng rng(seed);
    Observation out;
    out.b.resize(clean.size());
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                if (!(m.sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
                std::normal_distribution<double> normal(0.0, 1.0);
                for (std::size_t i = 0; i < clean.size(); ++i) out.b[i] = clean[i] + m.sigma * normal(rng);
            } else {
                if (!(m.scale > 0.0)) throw std::invalid_argument("add_noise: poisson scale must be > 0");
                for (double c : clean) {
                    if (c < 0.0) throw std::invalid_argument("add_noise: poisson noise needs nonnegative measurements");
                }
                for (std::size_t i = 0; i < clean.size(); ++i) {
                    std::poisson_distribution<std::int64_t> poisson(m.scale * clean[i]);
                    out.b[i] = clean[i] == 0.0 ? 0.0 : static_cast<double>(poisson(rng)) / m.scale;
                }
            }
        },
        model);
    out.w = subtract(out.b, clean);
    return out;
}

struct RingSpec {
    double inner = 0.4;
    double outer = 0.7;
    double background = 0.1;
    double level = 0.9;
};
struct TexturedSpec {
    std::size_t smoothness = 4;
    std::uint64_t seed = 0;
};
using PhantomSpec = std::variant<RingSpec, TexturedSpec>;

struct NoNoise {};
using NoiseSpec = std::variant<NoNoise, GaussianNoise, PoissonNoise>;

struct ProblemSpec {
    std::size_t n_r = 32;
    std::size_t n_theta = 64;
    double angle_fraction = 0.25;
    std::size_t rays_per_angle = 32;
    PhantomSpec phantom = RingSpec{};
    NoiseSpec noise = NoNoise{};
    std::uint64_t operator_seed = 0;
    std::uint64_t noise_seed = 0;
};

inline Vector make_phantom(const ProblemSpec& spec) {
    return std::visit(
        [&](const auto& p) -> Vector {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RingSpec>) {
                const Vector profile = ring_profile(spec.n_r, p.inner, p.outer, p.background, p.level);
                return ring_phantom(spec.n_r, spec.n_theta, profile);
            } else {
                return textured_phantom(spec.n_r, spec.n_theta, p.smoothness, p.seed);
            }
        },
        spec.phantom);
}

/// Phantom, operator and noise assembled into a box-constrained problem on [0,1]^d.
inline ProblemInstance build_problem(const ProblemSpec& spec) {
    if (spec.n_r < 1 || spec.n_theta < 1) throw std::invalid_argument("build_problem: empty grid");
    Vector x = make_phantom(spec);
    std::vector<std::size_t> angles = evenly_spaced_angles(spec.n_theta, spec.angle_fraction);
    PolarGeometry geometry{spec.n_r, spec.n_theta, angles, spec.rays_per_angle};
    LinearMap A = angle_subsampled_operator(spec.n_r, spec.n_theta, angles, spec.rays_per_angle, spec.operator_seed);
    const Vector clean = A.apply(x);
    Vector b = std::visit(
        [&](const auto& n) -> Vector {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NoNoise>) {
                return clean;
            } else {
                return add_noise(clean, NoiseModel{n}, spec.noise_seed).b;
            }
        },
        spec.noise);
    const std::size_t d = x.size();
    return make_problem(std::move(x), std::move(A), std::move(b), ConstraintSet::box(d, 0.0, 1.0),
                        std::move(geometry));
}

} // namespace gpgd::bench
