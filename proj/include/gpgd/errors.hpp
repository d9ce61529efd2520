#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpgd {

/// Operand shapes disagree (vector length vs operator dimension, etc.).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dense assembly was requested above the configured size cap.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// An iterate became non-finite or exceeded the divergence guard.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t iteration, const std::string& what)
        : std::runtime_error(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// The convergence bound is not contractive (alpha >= 1) so no curve exists.
class BoundVacuousError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require_dims(std::size_t got, std::size_t expected, const char* what) {
    if (got != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(got));
    }
}

} // namespace detail
} // namespace gpgd
