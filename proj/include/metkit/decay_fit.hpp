#pragma once

// Qubit decay models:
//   T1       P1(t) = A + B exp(-t / T1)
//   T2 echo  P1(t) = A + B exp(-(t / T2)^n),  n in [0.5, 3]
//
// Time is rescaled by the trace span before fitting so every parameter is of
// order one; results are reported in microseconds.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/lm.hpp"
#include "metkit/trace.hpp"
#include "metkit/units.hpp"

namespace metkit::fit {

inline constexpr double kStretchMin = 0.5;
inline constexpr double kStretchMax = 3.0;

struct DecayFit {
    FitResult fit;  // parameters A, B, tau_us, and n for the stretched model
    double tau_us = 0.0;
    double tau_error_us = 0.0;
    double offset = 0.0;     // A
    double amplitude = 0.0;  // B
    double stretch = 1.0;    // n
};

namespace detail {

struct DecayGuess {
    double offset;
    double amplitude;
    double tau;  // scaled units
};

inline DecayGuess guess_decay(std::span<const double> u, std::span<const double> y) {
    const std::size_t n = y.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    const double offset = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(tail), y.end(), 0.0) / static_cast<double>(tail);
    const double amplitude = y.front() - offset;
    double tau = 0.5 * (u.back() - u.front());
    if (amplitude != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            if ((y[i] - offset) / amplitude <= std::exp(-1.0)) {
                tau = std::max(u[i] - u.front(), 1e-3);
                break;
            }
        }
    }
    return {offset, amplitude, tau};
}

inline DecayFit fit_decay(const MeasurementTrace& trace, std::optional<double> fixed_stretch, bool stretched) {
    validate(trace, kMinFitPoints);
    const double span = trace.x.back() - trace.x.front();
    metkit::detail::require(span > 0.0, "trace has zero time span");
    std::vector<double> u(trace.x.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = trace.x[i] / span;

    const auto g = guess_decay(u, trace.y);
    if (g.amplitude == 0.0) throw ComputationError("decay amplitude is zero; time constant is unidentifiable");

    std::vector<Parameter> params{
        {"A", g.offset},
        {"B", g.amplitude},
        {"tau", g.tau, 1e-6, 1e3},
    };
    FitResult fit;
    if (stretched) {
        double n0 = fixed_stretch.value_or(1.0);
        metkit::detail::require(n0 >= kStretchMin && n0 <= kStretchMax, "stretch exponent outside [0.5, 3]");
        params.push_back(fixed_stretch ? Parameter{"n", n0, n0, n0} : Parameter{"n", n0, kStretchMin, kStretchMax});
        const ScalarModel model = [](double t, std::span<const double> p) {
            return p[0] + p[1] * std::exp(-std::pow(t / p[2], p[3]));
        };
        fit = lm_fit(model, u, trace.y, params);
    } else {
        const ScalarModel model = [](double t, std::span<const double> p) { return p[0] + p[1] * std::exp(-t / p[2]); };
        fit = lm_fit(model, u, trace.y, params);
    }

    const double b = fit.value("B");
    const double a = fit.value("A");
    if (fit.singular || std::abs(b) <= 1e-12 * std::max(1.0, std::abs(a)) || !std::isfinite(fit.error("tau"))) {
        throw ComputationError("decay time constant is unidentifiable (no resolvable decay amplitude)");
    }
    if (!fit.converged) throw ComputationError("decay fit did not converge: " + fit.message);

    const double to_us = span / units::kMicro;
    DecayFit out;
    out.offset = a;
    out.amplitude = b;
    out.tau_us = fit.value("tau") * to_us;
    out.tau_error_us = fit.error("tau") * to_us;
    out.stretch = stretched ? fit.value("n") : 1.0;
    // Report tau in microseconds inside the FitResult as well.
    const auto k = fit.index("tau");
    fit.names[k] = "tau_us";
    fit.values[k] *= to_us;
    fit.errors[k] *= to_us;
    out.fit = std::move(fit);
    return out;
}

}  // namespace detail

/// Exponential T1 fit; `tau_us` is T1.
inline DecayFit fit_t1(const MeasurementTrace& trace) {
    return detail::fit_decay(trace, std::nullopt, false);
}

/// Stretched-exponential echo fit; `tau_us` is T2 and `stretch` is n.
inline DecayFit fit_t2_stretched(const MeasurementTrace& trace, std::optional<double> fixed_stretch = std::nullopt) {
    return detail::fit_decay(trace, fixed_stretch, true);
}

}  // namespace metkit::fit
