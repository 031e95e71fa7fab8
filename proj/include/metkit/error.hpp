#pragma once

#include <stdexcept>
#include <string>

namespace metkit {

/// Input rejected before any computation ran (bad ranges, malformed files).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A well-formed input for which the numerics failed (no root, no convergence).
class ComputationError : public std::runtime_error {
public:
    explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

}  // namespace detail
}  // namespace metkit
