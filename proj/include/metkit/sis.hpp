#pragma once

// Quasiparticle tunneling current through a superconductor-insulator-
// superconductor junction with Dynes-broadened BCS densities of states:
//
//   N(E) = |Re[(E - i gamma) / sqrt((E - i gamma)^2 - Delta^2)]|
//   I(V) = (1 / e R_n) Int N1(E) N2(E + eV) [f(E) - f(E + eV)] dE
//
// Energies are handled in micro-electronvolts internally. The integral is
// split at every gap edge and Fermi edge and each piece is integrated with
// tanh-sinh quadrature, which tolerates the inverse-square-root edges that
// remain when gamma = 0.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/units.hpp"

namespace metkit::fit {

struct SisParams {
    double gap1_uev = 200.0;
    double gap2_uev = 200.0;
    double gamma_uev = 0.0;
    double temperature_k = 0.02;
    double rn_ohm = 1.0;
};

inline void validate(const SisParams& p) {
    using metkit::detail::require;
    require(std::isfinite(p.gap1_uev) && p.gap1_uev > 0.0 && std::isfinite(p.gap2_uev) && p.gap2_uev > 0.0,
            "gaps must be positive");
    require(std::isfinite(p.gamma_uev) && p.gamma_uev >= 0.0, "Dynes gamma must be non-negative");
    require(std::isfinite(p.temperature_k) && p.temperature_k >= 0.0, "temperature must be non-negative");
    require(std::isfinite(p.rn_ohm) && p.rn_ohm > 0.0, "normal resistance must be positive");
}

/// Dynes density of states normalized to the normal state.
inline double dynes_dos(double e_uev, double gap_uev, double gamma_uev) {
    if (gamma_uev == 0.0) {
        const double a = std::abs(e_uev);
        if (a <= gap_uev) return 0.0;
        const double d = (a - gap_uev) * (a + gap_uev);
        return d > 0.0 ? a / std::sqrt(d) : 0.0;
    }
    const std::complex<double> z(e_uev, -gamma_uev);
    const std::complex<double> root = std::sqrt(z * z - gap_uev * gap_uev);
    const double value = std::abs((z / root).real());
    return std::isfinite(value) ? value : 0.0;
}

namespace detail {

/// f(E) - f(E + u) for thermal energy kt (both in ueV).
inline double fermi_window(double e, double u, double kt) {
    if (kt == 0.0) return (e < 0.0 && e + u > 0.0) ? 1.0 : 0.0;
    return 0.5 * (std::tanh((e + u) / (2.0 * kt)) - std::tanh(e / (2.0 * kt)));
}

inline double integrate_pieces(const SisParams& p, double u_uev) {
    const double kt = units::kBoltzmannEv * p.temperature_k * 1e6;  // ueV
    // Outside [-u - 40 kT, 40 kT] the Fermi window is below e^-40.
    const double lo = -u_uev - 40.0 * kt;
    const double hi = 40.0 * kt;
    if (!(hi > lo)) return 0.0;

    std::vector<double> cuts{lo, hi, -p.gap1_uev, p.gap1_uev, -u_uev - p.gap2_uev, -u_uev + p.gap2_uev, 0.0, -u_uev};
    std::erase_if(cuts, [&](double c) { return c < lo || c > hi; });
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Two-argument form: boost passes the signed distance to the nearest end.
    auto integrand = [&](double e, double /*complement*/) {
        const double w = fermi_window(e, u_uev, kt);
        if (w == 0.0) return 0.0;
        return dynes_dos(e, p.gap1_uev, p.gamma_uev) * dynes_dos(e + u_uev, p.gap2_uev, p.gamma_uev) * w;
    };

    // Accuracy target: 1e-6 of the ohmic scale, with two decades of margin.
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    const double tol = 1e-8;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (!(b > a)) continue;
        // Skip pieces that are exactly inside both gaps with no broadening.
        if (p.gamma_uev == 0.0) {
            const double mid = 0.5 * (a + b);
            if (std::abs(mid) < p.gap1_uev || std::abs(mid + u_uev) < p.gap2_uev) continue;
        }
        double error = 0.0;
        double l1 = 0.0;
        total += integrator.integrate(integrand, a, b, tol, &error, &l1);
    }
    return total;
}

}  // namespace detail

/// Quasiparticle current in amperes at bias `v_volts`. Exactly odd in V.
inline double sis_current(double v_volts, const SisParams& p) {
    validate(p);
    metkit::detail::require(std::isfinite(v_volts), "voltage must be finite");
    if (v_volts == 0.0) return 0.0;
    const double u_uev = std::abs(v_volts) * 1e6;  // eV in ueV
    const double integral_uev = detail::integrate_pieces(p, u_uev);
    const double current = integral_uev * 1e-6 / p.rn_ohm;
    return v_volts > 0.0 ? current : -current;
}

/// dI/dV by central difference with step h (volts).
inline double sis_conductance(double v_volts, const SisParams& p, double h_volts) {
    metkit::detail::require(h_volts > 0.0, "difference step must be positive");
    return (sis_current(v_volts + h_volts, p) - sis_current(v_volts - h_volts, p)) / (2.0 * h_volts);
}

/// Difference step at each sample: min(local grid spacing, Delta / 50e).
inline std::vector<double> conductance_steps(std::span<const double> v, double gap_uev) {
    std::vector<double> h(v.size());
    const double gap_step = gap_uev * 1e-6 / 50.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double spacing = std::numeric_limits<double>::infinity();
        if (i > 0) spacing = std::min(spacing, v[i] - v[i - 1]);
        if (i + 1 < v.size()) spacing = std::min(spacing, v[i + 1] - v[i]);
        h[i] = std::min(spacing, gap_step);
    }
    return h;
}

}  // namespace metkit::fit
