#pragma once

// Fits the Dynes-broadened SIS model to an I-V or dI/dV trace, assuming two
// identical electrodes (Delta1 = Delta2). Temperature is held fixed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/lm.hpp"
#include "metkit/sis.hpp"
#include "metkit/trace.hpp"

namespace metkit::fit {

struct DynesOptions {
    double temperature_k = 0.02;
    double initial_gamma_uev = 1.0;
    double min_gamma_uev = 1e-3;
    double max_gamma_uev = 100.0;
};

struct DynesFit {
    FitResult fit;  // gap_uev, gamma_uev, rn_ohm
    double gap_uev = 0.0;
    double gamma_uev = 0.0;
    double rn_ohm = 0.0;
    double subgap_ratio = 0.0;  // G(V = Delta/e) * R_n
};

/// Model curve for a trace: current for `iv`, central-difference conductance for `didv`.
inline std::vector<double> sis_curve(TraceKind kind, std::span<const double> v, const SisParams& p) {
    std::vector<double> out(v.size());
    if (kind == TraceKind::iv) {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = sis_current(v[i], p);
    } else if (kind == TraceKind::didv) {
        const auto h = conductance_steps(v, std::min(p.gap1_uev, p.gap2_uev));
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = sis_conductance(v[i], p, h[i]);
    } else {
        throw ValidationError("SIS curves exist only for iv and didv traces");
    }
    return out;
}

namespace detail {

struct DynesGuess {
    double gap_uev;
    double rn_ohm;
};

inline DynesGuess guess_dynes(const MeasurementTrace& t) {
    const auto& v = t.x;
    std::vector<double> g(v.size());
    if (t.kind == TraceKind::didv) {
        g = t.y;
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 == v.size() ? i : i + 1;
            g[i] = (t.y[b] - t.y[a]) / (v[b] - v[a]);
        }
    }
    // Peak of conductance at positive bias sits at (Delta1 + Delta2) / e.
    std::size_t peak = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > 0.0 && g[i] > best) {
            best = g[i];
            peak = i;
        }
    }
    if (!(best > 0.0)) throw ComputationError("trace has no positive-bias conductance peak to seed the gap");
    const double gap = 0.5 * std::abs(v[peak]) * 1e6;

    // Normal resistance from the high-bias tail.
    const double vmax = std::max(std::abs(v.front()), std::abs(v.back()));
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= 0.8 * vmax) {
            sum += t.kind == TraceKind::didv ? g[i] : t.y[i] / v[i];
            ++count;
        }
    }
    const double gn = count > 0 ? sum / count : 0.0;
    if (!(gn > 0.0)) throw ComputationError("cannot estimate the normal-state resistance from the trace tail");
    return {gap, 1.0 / gn};
}

}  // namespace detail

inline DynesFit fit_dynes(const MeasurementTrace& trace, const DynesOptions& opt = {}) {
    validate(trace, kMinFitPoints);
    metkit::detail::require(trace.kind == TraceKind::iv || trace.kind == TraceKind::didv,
                            "Dynes fits take iv or didv traces");
    const auto guess = detail::guess_dynes(trace);
    // The conductance peak must sit inside the sweep, with normal-state tail beyond it.
    metkit::detail::require(std::abs(trace.x.back()) * 1e6 > 1.25 * 2.0 * guess.gap_uev,
                            "trace must span the gap edge");

    // The curve depends on R_n only through an overall 1/R_n factor, so the
    // unscaled curve is cached across evaluations that change R_n alone.
    struct Cache {
        double gap = -1.0;
        double gamma = -1.0;
        std::vector<double> unit_curve;
    } cache;
    const TraceKind kind = trace.kind;
    const double temperature = opt.temperature_k;
    const VectorModel model = [&cache, kind, temperature](std::span<const double> v, std::span<const double> p,
                                                          std::span<double> out) {
        if (p[0] != cache.gap || p[1] != cache.gamma || cache.unit_curve.size() != v.size()) {
            cache.gap = p[0];
            cache.gamma = p[1];
            cache.unit_curve = sis_curve(kind, v, {p[0], p[0], p[1], temperature, 1.0});
        }
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = cache.unit_curve[i] / p[2];
    };

    std::vector<Parameter> params{
        {"gap_uev", guess.gap_uev, 0.5 * guess.gap_uev, 2.0 * guess.gap_uev},
        {"gamma_uev", std::clamp(opt.initial_gamma_uev, opt.min_gamma_uev, opt.max_gamma_uev), opt.min_gamma_uev,
         opt.max_gamma_uev},
        {"rn_ohm", guess.rn_ohm, 1e-3 * guess.rn_ohm, 1e3 * guess.rn_ohm},
    };
    LmOptions lm;
    lm.max_iterations = 100;
    auto fit = lm_fit(model, trace.x, trace.y, params, lm);
    if (!fit.converged) throw ComputationError("Dynes fit did not converge: " + fit.message);

    DynesFit out;
    out.gap_uev = fit.value("gap_uev");
    out.gamma_uev = fit.value("gamma_uev");
    out.rn_ohm = fit.value("rn_ohm");
    const SisParams best{out.gap_uev, out.gap_uev, out.gamma_uev, temperature, out.rn_ohm};
    const double v_mid = out.gap_uev * 1e-6;
    out.subgap_ratio = sis_conductance(v_mid, best, out.gap_uev * 1e-6 / 50.0) * out.rn_ohm;
    out.fit = std::move(fit);
    return out;
}

}  // namespace metkit::fit
