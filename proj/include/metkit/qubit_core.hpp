#pragma once

// Cooper-pair-box / transmon spectrum in the charge basis.
//
// H = 4 E_C (n - n_g)^2 - (E_J / 2) sum_n (|n><n+1| + h.c.),  n = -N..N
//
// All energies are frequencies in GHz (E/h). The spectrum is even and
// 1-periodic in n_g, so the offset charge is folded into [0, 1/2] before the
// matrix is built; this makes both symmetries hold bit-for-bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/tridiagonal.hpp"

namespace metkit::qubit {

struct TransmonParams {
    double e_j = 0.0;     // GHz
    double e_c = 0.0;     // GHz
    double n_g = 0.0;     // offset charge, units of 2e
    int truncation = 20;  // charge states -N..N
};

struct SpectrumResult {
    std::vector<double> levels;  // ground-referenced, ascending, GHz
    double f01 = 0.0;
    double f12 = 0.0;
    double alpha = 0.0;  // f12 - f01
    double ej_over_ec = 0.0;
    int truncation = 0;  // basis half-width actually used
};

struct SquidParams {
    double e_j_sum = 0.0;    // GHz, both junctions
    double asymmetry = 0.0;  // d in [0, 1)
    double flux = 0.0;       // units of the flux quantum
};

/// Convergence policy for the adaptive solver.
inline constexpr int kMinTruncation = 4;
inline constexpr int kTruncationCap = 512;
inline constexpr double kConvergenceGhz = 1e-6;  // 1 kHz on f01

inline void validate(const TransmonParams& p) {
    metkit::detail::require(std::isfinite(p.e_c) && p.e_c > 0.0, "e_c must be positive");
    metkit::detail::require(std::isfinite(p.e_j) && p.e_j >= 0.0, "e_j must be non-negative");
    metkit::detail::require(std::isfinite(p.n_g), "n_g must be finite");
    metkit::detail::require(p.truncation >= kMinTruncation, "truncation must be >= 4");
}

/// Offset charge folded into [0, 1/2].
inline double fold_offset_charge(double n_g) { return std::abs(n_g - std::round(n_g)); }

inline SymmetricTridiagonal charge_hamiltonian(double e_j, double e_c, double n_g, int truncation) {
    const double ng = fold_offset_charge(n_g);
    const auto dim = static_cast<std::size_t>(2 * truncation + 1);
    SymmetricTridiagonal h;
    h.diagonal.resize(dim);
    h.off_diagonal.assign(dim - 1, -0.5 * e_j);
    for (std::size_t i = 0; i < dim; ++i) {
        const double n = static_cast<double>(static_cast<int>(i) - truncation) - ng;
        h.diagonal[i] = 4.0 * e_c * n * n;
    }
    return h;
}

/// Lowest `count` absolute eigenenergies at a fixed truncation.
inline std::vector<double> charge_basis_energies(const TransmonParams& p, std::size_t count) {
    validate(p);
    return lowest_eigenvalues(charge_hamiltonian(p.e_j, p.e_c, p.n_g, p.truncation), count);
}

struct ConvergedEnergies {
    std::vector<double> absolute;  // GHz, ascending
    int truncation = 0;
};

/// Doubles the basis until f01 moves by less than 1 kHz.
inline ConvergedEnergies converged_energies(const TransmonParams& p, std::size_t count) {
    validate(p);
    count = std::max<std::size_t>(count, 2);
    // Low states spread over ~(E_J / 8 E_C)^(1/4) charge states.
    const int heuristic = static_cast<int>(std::ceil(10.0 * std::pow(p.e_j / (8.0 * p.e_c), 0.25)));
    int n = std::max({p.truncation, 20, heuristic});
    metkit::detail::require(n <= kTruncationCap, "truncation exceeds the solver cap of 512");

    TransmonParams trial = p;
    trial.truncation = n;
    auto previous = charge_basis_energies(trial, count);
    while (true) {
        const int next = 2 * n;
        if (next > kTruncationCap) {
            throw ComputationError("transmon spectrum did not converge below the truncation cap (N = " +
                                   std::to_string(kTruncationCap) + ")");
        }
        trial.truncation = next;
        auto current = charge_basis_energies(trial, count);
        const double shift = std::abs((current[1] - current[0]) - (previous[1] - previous[0]));
        if (shift < kConvergenceGhz) return {std::move(current), next};
        previous = std::move(current);
        n = next;
    }
}

/// Transition ladder of the lowest `n_levels` states (n_levels >= 3).
inline SpectrumResult spectrum(const TransmonParams& p, int n_levels = 3) {
    validate(p);
    metkit::detail::require(n_levels >= 3, "spectrum needs at least three levels");
    metkit::detail::require(n_levels <= 2 * p.truncation, "n_levels must not exceed 2 * truncation");

    const auto energies = converged_energies(p, static_cast<std::size_t>(n_levels));
    SpectrumResult r;
    r.levels.reserve(energies.absolute.size());
    for (double e : energies.absolute) r.levels.push_back(e - energies.absolute.front());
    r.f01 = r.levels[1];
    r.f12 = r.levels[2] - r.levels[1];
    r.alpha = r.f12 - r.f01;
    r.ej_over_ec = p.e_j / p.e_c;
    r.truncation = energies.truncation;
    return r;
}

/// |E_m(n_g = 1/2) - E_m(n_g = 0)|, absolute (not ground-referenced) energies.
inline double charge_dispersion(const TransmonParams& p, int level) {
    validate(p);
    metkit::detail::require(level >= 0, "level must be non-negative");
    const auto count = static_cast<std::size_t>(level) + 1;
    TransmonParams at_zero = p;
    at_zero.n_g = 0.0;
    TransmonParams at_half = p;
    at_half.n_g = 0.5;
    const auto e0 = converged_energies(at_zero, count);
    const auto eh = converged_energies(at_half, count);
    return std::abs(eh.absolute[count - 1] - e0.absolute[count - 1]);
}

/// E_J(flux) = E_JS |cos(pi flux)| sqrt(1 + d^2 tan^2(pi flux)).
inline double squid_effective_ej(const SquidParams& s) {
    metkit::detail::require(std::isfinite(s.e_j_sum) && s.e_j_sum >= 0.0, "e_j_sum must be non-negative");
    metkit::detail::require(s.asymmetry >= 0.0 && s.asymmetry < 1.0, "asymmetry must lie in [0, 1)");
    metkit::detail::require(std::isfinite(s.flux), "flux must be finite");
    const double phase = std::numbers::pi * (s.flux - std::round(s.flux));
    const double c = std::cos(phase);
    const double sn = std::sin(phase);
    return s.e_j_sum * std::sqrt(c * c + s.asymmetry * s.asymmetry * sn * sn);
}

// ---------------------------------------------------------------------------
// Inversion: (f01, alpha) -> (E_J, E_C) at n_g = 0.

struct InversionOptions {
    double min_ratio = 10.0;    // transmon search box on E_J / E_C
    double max_ratio = 2000.0;
    double tolerance = 1e-9;    // GHz on both residuals
    int max_newton_iterations = 60;
    bool bisection_only = false;
};

struct InversionResult {
    TransmonParams params;
    int newton_iterations = 0;
    bool used_bisection = false;
};

namespace detail {

struct FreqAlpha {
    double f01;
    double alpha;
};

inline FreqAlpha transition_pair(double e_j, double e_c) {
    const auto s = spectrum({e_j, e_c, 0.0, 20}, 3);
    return {s.f01, s.alpha};
}

inline InversionResult invert_by_ratio_bisection(double f01, double alpha, const InversionOptions& opt) {
    // f01 and alpha are both homogeneous of degree one in (E_J, E_C), so alpha/f01
    // depends on E_J/E_C alone and decreases in magnitude as the ratio grows.
    const double target = alpha / f01;
    auto shape = [](double ratio) {
        const auto fa = transition_pair(ratio, 1.0);
        return fa.alpha / fa.f01;
    };
    double lo = opt.min_ratio;
    double hi = opt.max_ratio;
    const double g_lo = shape(lo) - target;
    const double g_hi = shape(hi) - target;
    if (g_lo * g_hi > 0.0) {
        throw ComputationError("no transmon solution in the search box E_J/E_C in [" + std::to_string(opt.min_ratio) +
                               ", " + std::to_string(opt.max_ratio) + "]");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((shape(mid) - target) * g_lo > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double ratio = 0.5 * (lo + hi);
    const double e_c = f01 / transition_pair(ratio, 1.0).f01;
    InversionResult out;
    out.params = {ratio * e_c, e_c, 0.0, 20};
    out.used_bisection = true;
    return out;
}

inline bool newton_invert(double f01, double alpha, const InversionOptions& opt, InversionResult& out) {
    double e_c = std::abs(alpha);
    double e_j = (f01 + e_c) * (f01 + e_c) / (8.0 * e_c);
    auto residual_norm = [&](const FreqAlpha& fa) {
        return std::max(std::abs(fa.f01 - f01), std::abs(fa.alpha - alpha));
    };
    FreqAlpha fa = transition_pair(e_j, e_c);
    for (int it = 0; it < opt.max_newton_iterations; ++it) {
        const double r0 = fa.f01 - f01;
        const double r1 = fa.alpha - alpha;
        if (residual_norm(fa) < opt.tolerance) {
            out.params = {e_j, e_c, 0.0, 20};
            out.newton_iterations = it;
            return true;
        }
        const double hj = 1e-6 * e_j;
        const double hc = 1e-6 * e_c;
        const auto pj = transition_pair(e_j + hj, e_c);
        const auto mj = transition_pair(e_j - hj, e_c);
        const auto pc = transition_pair(e_j, e_c + hc);
        const auto mc = transition_pair(e_j, e_c - hc);
        const double j00 = (pj.f01 - mj.f01) / (2 * hj), j01 = (pc.f01 - mc.f01) / (2 * hc);
        const double j10 = (pj.alpha - mj.alpha) / (2 * hj), j11 = (pc.alpha - mc.alpha) / (2 * hc);
        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || det == 0.0) return false;
        double dj = -(j11 * r0 - j01 * r1) / det;
        double dc = -(-j10 * r0 + j00 * r1) / det;

        // Backtrack until the step stays positive and reduces the residual.
        const double current = residual_norm(fa);
        double scale = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, scale *= 0.5) {
            const double nj = e_j + scale * dj;
            const double nc = e_c + scale * dc;
            if (nj <= 0.0 || nc <= 0.0) continue;
            const auto trial = transition_pair(nj, nc);
            if (residual_norm(trial) < current) {
                e_j = nj;
                e_c = nc;
                fa = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) return false;
    }
    return false;
}

}  // namespace detail

inline InversionResult invert_spectroscopy_detailed(double f01, double alpha, const InversionOptions& opt = {}) {
    metkit::detail::require(std::isfinite(f01) && f01 > 0.0, "f01 must be positive");
    metkit::detail::require(std::isfinite(alpha) && alpha < 0.0, "alpha must be negative");
    metkit::detail::require(std::abs(alpha) < f01, "|alpha| must be smaller than f01");

    InversionResult out;
    if (!opt.bisection_only && detail::newton_invert(f01, alpha, opt, out)) {
        const double ratio = out.params.e_j / out.params.e_c;
        if (ratio >= opt.min_ratio && ratio <= opt.max_ratio) return out;
    }
    return detail::invert_by_ratio_bisection(f01, alpha, opt);
}

/// Solves spectrum(E_J, E_C, n_g = 0) = (f01, alpha); inputs in GHz, alpha < 0.
inline TransmonParams invert_spectroscopy(double f01, double alpha, const InversionOptions& opt = {}) {
    return invert_spectroscopy_detailed(f01, alpha, opt).params;
}

}  // namespace metkit::qubit
