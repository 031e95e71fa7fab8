#pragma once

// Eigenvalues of real symmetric tridiagonal matrices by Sturm-sequence
// bisection. Only the lowest few eigenvalues are ever requested here, so
// bisection beats a full QL sweep and is deterministic to the last bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "metkit/error.hpp"

namespace metkit {

struct SymmetricTridiagonal {
    std::vector<double> diagonal;      // n entries
    std::vector<double> off_diagonal;  // n - 1 entries

    [[nodiscard]] std::size_t size() const { return diagonal.size(); }
};

namespace detail {

inline double pivot_floor(std::span<const double> off_diagonal) {
    double max_e2 = 1.0;
    for (double e : off_diagonal) max_e2 = std::max(max_e2, e * e);
    return std::numeric_limits<double>::min() * max_e2 / std::numeric_limits<double>::epsilon();
}

}  // namespace detail

/// Number of eigenvalues strictly below `x`.
inline std::size_t sturm_count(const SymmetricTridiagonal& t, double x, double pivmin) {
    std::size_t count = 0;
    double q = t.diagonal[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double e = t.off_diagonal[i - 1];
        q = t.diagonal[i] - x - e * e / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0.0) ++count;
    }
    return count;
}

inline std::size_t sturm_count(const SymmetricTridiagonal& t, double x) {
    return sturm_count(t, x, detail::pivot_floor(t.off_diagonal));
}

/// Ascending list of the `count` smallest eigenvalues, each bisected until the
/// bracket can no longer be split in double precision.
inline std::vector<double> lowest_eigenvalues(const SymmetricTridiagonal& t, std::size_t count) {
    const std::size_t n = t.size();
    metkit::detail::require(n > 0, "tridiagonal matrix is empty");
    metkit::detail::require(t.off_diagonal.size() + 1 == n, "off-diagonal length must be n - 1");
    metkit::detail::require(count <= n, "requested more eigenvalues than the matrix dimension");

    // Gershgorin bounds.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(t.off_diagonal[i - 1]);
        if (i + 1 < n) radius += std::abs(t.off_diagonal[i]);
        lo = std::min(lo, t.diagonal[i] - radius);
        hi = std::max(hi, t.diagonal[i] + radius);
    }
    const double widen = 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
    lo -= widen + std::numeric_limits<double>::min();
    hi += widen + std::numeric_limits<double>::min();

    const double pivmin = detail::pivot_floor(t.off_diagonal);
    std::vector<double> values;
    values.reserve(count);
    double floor = lo;
    for (std::size_t k = 0; k < count; ++k) {
        // Invariant: count(a) <= k < count(b).
        double a = floor;
        double b = hi;
        for (int iter = 0; iter < 2200; ++iter) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            if (sturm_count(t, mid, pivmin) > k)
                b = mid;
            else
                a = mid;
        }
        const double value = 0.5 * (a + b);
        values.push_back(value);
        floor = a;
    }
    return values;
}

}  // namespace metkit
