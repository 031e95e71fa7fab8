#pragma once

// JSON views of the numeric results. Field names carry SI suffixes
// (_hz, _f, _ohm, _a, _ev, _s, _m, _m2); internal GHz / fF / nA / ueV / us
// values are converted at this boundary only.

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "metkit/decay_fit.hpp"
#include "metkit/dynes_fit.hpp"
#include "metkit/error.hpp"
#include "metkit/junction_design.hpp"
#include "metkit/lm.hpp"
#include "metkit/loss_budget.hpp"
#include "metkit/qubit_core.hpp"
#include "metkit/spectro_sim.hpp"
#include "metkit/stats.hpp"
#include "metkit/units.hpp"

namespace metkit::io {

using Json = nlohmann::ordered_json;

inline constexpr double kGhzToHz = 1e9;
inline constexpr double kFemtofarad = 1e-15;
inline constexpr double kNanoamp = 1e-9;
inline constexpr double kMicroEv = 1e-6;
inline constexpr double kMicrosecond = 1e-6;
inline constexpr double kNanometre = 1e-9;
inline constexpr double kSquareMicron = 1e-12;

/// JSON has no infinity; unbounded values become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

// ---------------------------------------------------------------------------
// Field access with readable errors

inline const Json& field(const Json& j, const std::string& key, const std::string& context) {
    if (!j.is_object()) throw ValidationError(context + " must be a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(context + " is missing field '" + key + "'");
    return *it;
}

inline double number(const Json& j, const std::string& key, const std::string& context) {
    const auto& v = field(j, key, context);
    if (!v.is_number()) throw ValidationError(context + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(context + "." + key + " must be finite");
    return d;
}

inline double number_or(const Json& j, const std::string& key, double fallback, const std::string& context) {
    return j.contains(key) ? number(j, key, context) : fallback;
}

inline std::string text(const Json& j, const std::string& key, const std::string& context) {
    const auto& v = field(j, key, context);
    if (!v.is_string()) throw ValidationError(context + "." + key + " must be a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const Json& j, const std::string& key, const std::string& context) {
    const auto& v = field(j, key, context);
    if (!v.is_array()) throw ValidationError(context + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError(context + "." + key + " must contain only numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

/// Either an explicit list or {"start", "stop", "count"} (inclusive, uniform).
inline std::vector<double> grid(const Json& j, const std::string& key, const std::string& context) {
    const auto& v = field(j, key, context);
    if (v.is_array()) return number_list(j, key, context);
    const std::string ctx = context + "." + key;
    const double start = number(v, "start", ctx);
    const double stop = number(v, "stop", ctx);
    const double count = number(v, "count", ctx);
    if (!(count >= 2.0) || count != std::floor(count)) throw ValidationError(ctx + ".count must be an integer >= 2");
    const auto n = static_cast<std::size_t>(count);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// ---------------------------------------------------------------------------
// Results

inline Json to_json(const design::JunctionSpec& s) {
    return Json{{"area_m2", s.area_um2 * kSquareMicron},
                {"oxide_thickness_m", s.oxide_thickness_nm * kNanometre},
                {"eps_r", s.eps_r},
                {"rn_room_ohm", s.rn_room_ohm},
                {"cold_factor", s.cold_factor},
                {"gap_ev", s.gap_uev * kMicroEv}};
}

inline Json to_json(const design::DeviceDesign& d) {
    return Json{{"c_jj_f", d.c_jj_ff * kFemtofarad},   {"c_stray_f", d.c_stray_ff * kFemtofarad},
                {"c_total_f", d.c_total_ff * kFemtofarad}, {"i_c_a", d.i_c_na * kNanoamp},
                {"e_j_hz", d.e_j_ghz * kGhzToHz},          {"e_c_hz", d.e_c_ghz * kGhzToHz},
                {"ej_over_ec", d.ej_over_ec},              {"f01_hz", d.f01_ghz * kGhzToHz},
                {"alpha_hz", d.alpha_ghz * kGhzToHz},      {"p_jj", d.p_jj}};
}

inline Json to_json(const qubit::SpectrumResult& r) {
    Json levels = Json::array();
    for (double e : r.levels) levels.push_back(e * kGhzToHz);
    return Json{{"levels_hz", levels},
                {"f01_hz", r.f01 * kGhzToHz},
                {"f12_hz", r.f12 * kGhzToHz},
                {"alpha_hz", r.alpha * kGhzToHz},
                {"ej_over_ec", r.ej_over_ec},
                {"truncation", r.truncation}};
}

inline Json to_json(const qubit::InversionResult& r) {
    return Json{{"e_j_hz", r.params.e_j * kGhzToHz},
                {"e_c_hz", r.params.e_c * kGhzToHz},
                {"ej_over_ec", r.params.e_j / r.params.e_c},
                {"newton_iterations", r.newton_iterations},
                {"used_bisection", r.used_bisection}};
}

inline Json to_json(const fit::FitResult& f) {
    Json params = Json::object();
    for (std::size_t i = 0; i < f.names.size(); ++i)
        params[f.names[i]] = Json{{"value", f.values[i]}, {"stderr", number_or_null(f.errors[i])}};
    return Json{{"params", params},     {"chi2", f.chi2},         {"dof", f.dof},
                {"converged", f.converged}, {"singular", f.singular}, {"iterations", f.iterations},
                {"gradient_cosine", f.gradient}, {"message", f.message}};
}

inline Json to_json(const fit::DecayFit& d, bool stretched) {
    Json j{{"model", stretched ? "A + B exp(-(t/T2)^n)" : "A + B exp(-t/T1)"},
           {stretched ? "t2_s" : "t1_s", d.tau_us * kMicrosecond},
           {stretched ? "t2_stderr_s" : "t1_stderr_s", number_or_null(d.tau_error_us * kMicrosecond)},
           {"offset", d.offset},
           {"amplitude", d.amplitude}};
    if (stretched) j["stretch"] = d.stretch;
    j["fit"] = to_json(d.fit);
    return j;
}

inline Json to_json(const fit::DynesFit& d) {
    return Json{{"model", "Dynes-broadened SIS, equal gaps"},
                {"gap_ev", d.gap_uev * kMicroEv},
                {"gamma_ev", d.gamma_uev * kMicroEv},
                {"rn_ohm", d.rn_ohm},
                {"subgap_ratio", d.subgap_ratio},
                {"fit", to_json(d.fit)}};
}

inline Json to_json(const sim::CrossingReport& r) {
    Json list = Json::array();
    for (const auto& c : r.crossings)
        list.push_back(Json{{"bias_a", c.bias_a}, {"center_hz", c.center_ghz * kGhzToHz}, {"splitting_hz", c.splitting_ghz * kGhzToHz}});
    return Json{{"count", r.crossings.size()},
                {"crossings", list},
                {"threshold_hz", r.threshold_ghz * kGhzToHz},
                {"bandwidth_hz", r.bandwidth_ghz * kGhzToHz},
                {"area_m2", r.area_um2 ? Json(*r.area_um2 * kSquareMicron) : Json(nullptr)},
                {"density_per_um2_per_ghz", optional_json(r.density)}};
}

inline Json to_json(const loss::LossBudget& b) {
    Json channels = Json::array();
    for (const auto& c : b.channels)
        channels.push_back(Json{{"name", c.name},
                                {"participation", c.participation},
                                {"tan_delta", c.tan_delta},
                                {"contribution", c.participation * c.tan_delta}});
    return Json{{"channels", channels},
                {"gamma_q", b.gamma_q},
                {"q", number_or_null(b.q)},
                {"f01_hz", b.f01_ghz * kGhzToHz},
                {"t1_limit_s", number_or_null(b.t1_limit_us * kMicrosecond)}};
}

inline Json to_json(const loss::Projection& p) {
    return Json{{"participation_ratio", p.participation_ratio},
                {"t1_limit_by_participation_s", p.t1_ms_by_participation * 1e-3},
                {"area_ratio", p.area_ratio},
                {"t1_limit_by_area_s", p.t1_ms_by_area * 1e-3},
                {"caveat", p.caveat}};
}

inline Json to_json(const stats::SampleStats& s) {
    Json j{{"best_s", s.best * kMicrosecond}, {"mean_s", s.mean * kMicrosecond}, {"std_s", s.std * kMicrosecond}};
    if (s.count > 0) j["count"] = s.count;
    if (s.insufficient) j["insufficient_samples"] = true;
    return j;
}

// ---------------------------------------------------------------------------
// Inputs

/// Flux-map simulation config and its defect list.
struct FluxMapInput {
    sim::FluxMapConfig config;
    std::vector<sim::TlsDefect> defects;
};

inline FluxMapInput fluxmap_input_from_json(const Json& j) {
    const std::string ctx = "fluxmap config";
    FluxMapInput in;
    auto& c = in.config;
    c.bias_a = grid(j, "bias_a", ctx);
    const auto& transfer = field(j, "flux_transfer", ctx);
    c.transfer.k_phi0_per_a = number(transfer, "k_phi0_per_a", ctx + ".flux_transfer");
    c.transfer.offset_phi0 = number_or(transfer, "offset_phi0", 0.0, ctx + ".flux_transfer");
    const auto& squid = field(j, "squid", ctx);
    c.squid.e_j_sum = number(squid, "e_j_sum_hz", ctx + ".squid") / kGhzToHz;
    c.squid.asymmetry = number_or(squid, "asymmetry", 0.0, ctx + ".squid");
    c.e_c_ghz = number(j, "e_c_hz", ctx) / kGhzToHz;
    c.freq_ghz = grid(j, "freq_hz", ctx);
    for (double& f : c.freq_ghz) f /= kGhzToHz;
    c.linewidth_ghz = number(j, "linewidth_hz", ctx) / kGhzToHz;
    c.noise = number_or(j, "noise", 0.0, ctx);
    const double seed = number_or(j, "seed", 0.0, ctx);
    if (seed < 0.0 || seed != std::floor(seed)) throw ValidationError(ctx + ".seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    if (j.contains("defects")) {
        const auto& list = j.at("defects");
        if (!list.is_array()) throw ValidationError(ctx + ".defects must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string dctx = ctx + ".defects[" + std::to_string(i) + "]";
            sim::TlsDefect d;
            d.frequency_ghz = number(list[i], "frequency_hz", dctx) / kGhzToHz;
            d.coupling_ghz = number(list[i], "coupling_hz", dctx) / kGhzToHz;
            d.label = list[i].contains("label") ? text(list[i], "label", dctx) : "tls" + std::to_string(i);
            in.defects.push_back(std::move(d));
        }
    }
    return in;
}

}  // namespace metkit::io
