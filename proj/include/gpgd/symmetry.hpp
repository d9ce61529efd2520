#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpgd/errors.hpp"
#include "gpgd/vector_ops.hpp"

/// Cyclic group actions on signals, realised as exact index permutations.
///
/// Polar signals use row-major layout: index = r * n_theta + theta, so the
/// angular index is the fast axis. A theta-shift by s maps x(r, theta) to
/// x(r, theta - s), which is a pure reordering and therefore orthogonal.
namespace gpgd {

using Rng = std::mt19937_64;

class GroupAction {
public:
    /// `destination[i]` is the position that entry i is moved to.
    GroupAction(std::vector<std::size_t> destination, std::int64_t power, std::string label)
        : destination_(std::move(destination)), power_(power), label_(std::move(label)) {
        source_.assign(destination_.size(), destination_.size());
        for (std::size_t i = 0; i < destination_.size(); ++i) {
            const std::size_t j = destination_[i];
            if (j >= destination_.size() || source_[j] != destination_.size()) {
                throw std::invalid_argument("GroupAction: permutation is not a bijection");
            }
            source_[j] = i;
        }
    }

    static GroupAction identity(std::size_t dimension) {
        std::vector<std::size_t> p(dimension);
        std::iota(p.begin(), p.end(), std::size_t{0});
        return GroupAction(std::move(p), 0, "Id");
    }

    std::size_t dimension() const noexcept { return destination_.size(); }
    std::int64_t power() const noexcept { return power_; }
    const std::string& label() const noexcept { return label_; }
    std::span<const std::size_t> permutation() const noexcept { return destination_; }

    bool is_identity() const noexcept {
        for (std::size_t i = 0; i < destination_.size(); ++i)
            if (destination_[i] != i) return false;
        return true;
    }

    /// T x
    Vector apply(std::span<const double> x) const {
        detail::require_dims(x.size(), dimension(), "GroupAction::apply");
        Vector out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[destination_[i]] = x[i];
        return out;
    }

    /// T^{-1} x (= T^T x)
    Vector apply_inverse(std::span<const double> x) const {
        detail::require_dims(x.size(), dimension(), "GroupAction::apply_inverse");
        Vector out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[destination_[i]];
        return out;
    }

    GroupAction inverse() const {
        return GroupAction(source_, -power_, label_ + "^-1");
    }

    /// (this ∘ other): apply `other` first.
    GroupAction after(const GroupAction& other) const {
        detail::require_dims(other.dimension(), dimension(), "GroupAction::after");
        std::vector<std::size_t> p(dimension());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = destination_[other.destination_[i]];
        return GroupAction(std::move(p), power_ + other.power_, label_ + "*" + other.label_);
    }

    friend bool operator==(const GroupAction& a, const GroupAction& b) {
        return a.destination_ == b.destination_;
    }

private:
    std::vector<std::size_t> destination_;
    std::vector<std::size_t> source_;
    std::int64_t power_;
    std::string label_;
};

namespace detail {
inline std::size_t positive_mod(std::int64_t a, std::size_t n) {
    const auto m = static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(((a % m) + m) % m);
}
} // namespace detail

/// Entry i moves to (i + s) mod d.
inline GroupAction cyclic_shift_action(std::size_t d, std::int64_t s) {
    if (d < 1) throw std::invalid_argument("cyclic_shift_action: d must be >= 1");
    std::vector<std::size_t> p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = detail::positive_mod(static_cast<std::int64_t>(i) + s, d);
    return GroupAction(std::move(p), s, "shift(" + std::to_string(s) + ")");
}

/// (T x)(r, theta) = x(r, theta - s) on an n_r x n_theta polar grid.
inline GroupAction polar_theta_shift(std::size_t n_r, std::size_t n_theta, std::int64_t s) {
    if (n_r < 1 || n_theta < 1) throw std::invalid_argument("polar_theta_shift: empty grid");
    std::vector<std::size_t> p(n_r * n_theta);
    for (std::size_t r = 0; r < n_r; ++r) {
        for (std::size_t t = 0; t < n_theta; ++t) {
            p[r * n_theta + t] =
                r * n_theta + detail::positive_mod(static_cast<std::int64_t>(t) + s, n_theta);
        }
    }
    return GroupAction(std::move(p), s, "theta_shift(" + std::to_string(s) + ")");
}

/// Ordered subset {Id, g, g^-1, g^2, g^-2, ...}: contains the identity and
/// every inverse, but need not be closed under composition.
class SymmetricSubset {
public:
    SymmetricSubset(const GroupAction& generator, std::size_t radius)
        : radius_(radius), generator_label_(generator.label()) {
        const std::size_t d = generator.dimension();
        actions_.reserve(2 * radius + 1);
        actions_.push_back(GroupAction::identity(d));
        const GroupAction g_inv = generator.inverse();
        GroupAction forward = GroupAction::identity(d);
        GroupAction backward = GroupAction::identity(d);
        for (std::size_t k = 1; k <= radius; ++k) {
            forward = generator.after(forward);
            backward = g_inv.after(backward);
            const auto kk = static_cast<std::int64_t>(k);
            const std::string tag = generator_label_ + "^";
            actions_.emplace_back(std::vector<std::size_t>(forward.permutation().begin(),
                                                           forward.permutation().end()),
                                  kk * generator.power(), tag + std::to_string(kk));
            actions_.emplace_back(std::vector<std::size_t>(backward.permutation().begin(),
                                                           backward.permutation().end()),
                                  -kk * generator.power(), tag + std::to_string(-kk));
        }
    }

    std::size_t size() const noexcept { return actions_.size(); }
    std::size_t radius() const noexcept { return radius_; }
    std::size_t dimension() const noexcept { return actions_.front().dimension(); }
    const std::string& generator_label() const noexcept { return generator_label_; }
    const GroupAction& operator[](std::size_t i) const { return actions_.at(i); }
    const std::vector<GroupAction>& actions() const noexcept { return actions_; }
    auto begin() const noexcept { return actions_.begin(); }
    auto end() const noexcept { return actions_.end(); }

private:
    std::vector<GroupAction> actions_;
    std::size_t radius_;
    std::string generator_label_;
};

inline SymmetricSubset symmetric_subset(const GroupAction& generator, std::size_t radius) {
    return SymmetricSubset(generator, radius);
}

/// Unbiased draw from {0, ..., n-1}; independent of the standard library's
/// distribution implementations so sequences are portable.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    static_assert(Rng::min() == 0 && Rng::max() == ~std::uint64_t{0});
    const std::uint64_t range = n;
    // 2^64 mod range; draws at or above 2^64 - rem would bias the residue.
    const std::uint64_t rem = (Rng::max() % range + 1) % range;
    for (;;) {
        const std::uint64_t v = rng();
        if (rem == 0 || v <= Rng::max() - rem) return static_cast<std::size_t>(v % range);
    }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct SampledAction {
    const GroupAction& action;
    std::size_t index;
};

/// Uniform draw over every action of the subset, identity included.
inline SampledAction sample_action(const SymmetricSubset& subset, Rng& rng) {
    const std::size_t i = uniform_index(rng, subset.size());
    return {subset[i], i};
}

/// Non-uniform sampling over a subset. Not covered by the certificate, which
/// assumes uniform sampling.
class WeightedSampler {
public:
    explicit WeightedSampler(std::vector<double> weights) : cumulative_(weights.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!(weights[i] >= 0.0)) throw std::invalid_argument("WeightedSampler: negative weight");
            total += weights[i];
            cumulative_[i] = total;
        }
        if (!(total > 0.0)) throw std::invalid_argument("WeightedSampler: weights sum to zero");
        for (double& c : cumulative_) c /= total;
    }

    std::size_t size() const noexcept { return cumulative_.size(); }

    SampledAction sample(const SymmetricSubset& subset, Rng& rng) const {
        detail::require_dims(subset.size(), size(), "WeightedSampler::sample");
        const double u = uniform_unit(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
        if (i >= size()) i = size() - 1;
        return {subset[i], i};
    }

private:
    std::vector<double> cumulative_;
};

} // namespace gpgd
