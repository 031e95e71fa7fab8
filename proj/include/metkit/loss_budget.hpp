#pragma once

// Participation-weighted dielectric loss accounting.
//
//   Gamma_Q = sum_i p_i tan(delta_i),   Q = 1 / Gamma_Q,   T1 = Q / (2 pi f01)

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/units.hpp"

namespace metkit::loss {

struct LossChannel {
    std::string name;
    double participation = 0.0;  // dimensionless energy fraction
    double tan_delta = 0.0;
};

/// Surface participations are tabulated per nm of contamination layer; the
/// layer thickness has no default and must be supplied.
inline LossChannel surface_channel(std::string name, double participation_per_nm, double thickness_nm,
                                   double tan_delta) {
    metkit::detail::require(participation_per_nm >= 0.0, "participation per nm must be non-negative");
    metkit::detail::require(std::isfinite(thickness_nm) && thickness_nm > 0.0, "layer thickness must be positive");
    return {std::move(name), participation_per_nm * thickness_nm, tan_delta};
}

inline void validate(std::span<const LossChannel> channels) {
    double sum = 0.0;
    for (const auto& c : channels) {
        metkit::detail::require(std::isfinite(c.participation) && c.participation >= 0.0 && c.participation <= 1.0,
                                "participation of '" + c.name + "' must lie in [0, 1]");
        metkit::detail::require(std::isfinite(c.tan_delta) && c.tan_delta >= 0.0,
                                "tan_delta of '" + c.name + "' must be non-negative");
        sum += c.participation;
    }
    metkit::detail::require(sum <= 1.0 + 1e-12, "channel participations sum to more than 1");
}

inline double total_loss(std::span<const LossChannel> channels) {
    validate(channels);
    double gamma = 0.0;
    for (const auto& c : channels) gamma += c.participation * c.tan_delta;
    return gamma;
}

/// Q = 2 pi f01 T1.
inline double q_from_t1(double f01_ghz, double t1_us) {
    metkit::detail::require(std::isfinite(f01_ghz) && f01_ghz > 0.0, "f01 must be positive");
    metkit::detail::require(std::isfinite(t1_us) && t1_us >= 0.0, "T1 must be non-negative");
    return units::kTwoPi * f01_ghz * units::kGiga * t1_us * units::kMicro;
}

inline double t1_from_q(double f01_ghz, double q) {
    metkit::detail::require(std::isfinite(f01_ghz) && f01_ghz > 0.0, "f01 must be positive");
    metkit::detail::require(q >= 0.0, "Q must be non-negative");
    return q / (units::kTwoPi * f01_ghz * units::kGiga) / units::kMicro;
}

struct LossBudget {
    std::vector<LossChannel> channels;
    double gamma_q = 0.0;
    double q = 0.0;
    double f01_ghz = 0.0;
    double t1_limit_us = 0.0;
};

inline LossBudget make_budget(std::vector<LossChannel> channels, double f01_ghz) {
    LossBudget b;
    b.gamma_q = total_loss(channels);
    b.channels = std::move(channels);
    b.f01_ghz = f01_ghz;
    b.q = b.gamma_q > 0.0 ? 1.0 / b.gamma_q : std::numeric_limits<double>::infinity();
    b.t1_limit_us = t1_from_q(f01_ghz, b.q);
    return b;
}

/// Upper bound on the junction loss tangent assuming every loss is junction loss.
inline double junction_loss_bound(double q, double p_jj) {
    metkit::detail::require(std::isfinite(q) && q > 0.0, "Q must be positive");
    metkit::detail::require(p_jj > 0.0 && p_jj <= 1.0, "p_jj must lie in (0, 1]");
    return (1.0 / q) / p_jj;
}

/// Junction-limited T1 (ms) of a device whose junction participation is p_conv,
/// given a measured junction-dominated T1 (us) at participation p_met.
inline double scale_to_conventional(double met_mean_t1_us, double p_met, double p_conv) {
    metkit::detail::require(met_mean_t1_us > 0.0 && p_met > 0.0, "T1 and p_met must be positive");
    metkit::detail::require(p_conv > 0.0, "p_conv must be positive");
    metkit::detail::require(p_conv <= p_met, "p_conv must not exceed p_met");
    return met_mean_t1_us * (p_met / p_conv) * 1e-3;
}

inline constexpr const char* kScalingCaveat =
    "assumes both junction types share the same oxide thickness and loss tangent";

/// Projection by both routes: participation ratio and bare junction-area ratio.
struct Projection {
    double participation_ratio = 0.0;
    double t1_ms_by_participation = 0.0;
    double area_ratio = 0.0;
    double t1_ms_by_area = 0.0;
    std::string caveat = kScalingCaveat;
};

inline Projection project(double met_mean_t1_us, double p_met, double p_conv, double area_met_um2,
                          double area_conv_um2) {
    metkit::detail::require(area_met_um2 > 0.0 && area_conv_um2 > 0.0, "areas must be positive");
    metkit::detail::require(area_conv_um2 <= area_met_um2, "conventional area must not exceed the MET area");
    Projection p;
    p.participation_ratio = p_met / p_conv;
    p.t1_ms_by_participation = scale_to_conventional(met_mean_t1_us, p_met, p_conv);
    p.area_ratio = area_met_um2 / area_conv_um2;
    p.t1_ms_by_area = met_mean_t1_us * p.area_ratio * 1e-3;
    return p;
}

/// Fractional reduction of one channel's contribution relative to a reference
/// with the same loss tangent, e.g. 0.30 for 3.5e-5 vs 5.0e-5.
inline double contribution_reduction(double participation, double reference_participation) {
    metkit::detail::require(reference_participation > 0.0, "reference participation must be positive");
    metkit::detail::require(participation >= 0.0, "participation must be non-negative");
    return 1.0 - participation / reference_participation;
}

/// "≲ 5×10⁻⁷": value rounded up to one significant figure.
inline std::string format_upper_bound(double value) {
    metkit::detail::require(std::isfinite(value) && value > 0.0, "bound must be positive and finite");
    int exponent = static_cast<int>(std::floor(std::log10(value)));
    double mantissa = std::ceil(value / std::pow(10.0, exponent) - 1e-9);
    if (mantissa >= 10.0) {
        mantissa = 1.0;
        ++exponent;
    }
    static constexpr const char* kSuperscripts[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
    std::string exp_text = exponent < 0 ? "⁻" : "";
    for (char ch : std::to_string(std::abs(exponent))) exp_text += kSuperscripts[ch - '0'];
    char buf[16];
    std::snprintf(buf, sizeof buf, "%d", static_cast<int>(mantissa));
    return std::string("≲ ") + buf + "×10" + exp_text;
}

}  // namespace metkit::loss
