#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "metkit/error.hpp"

namespace metkit {

enum class TraceKind { t1_decay, t2_echo, iv, didv, fluxmap_slice };

inline std::string_view to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::t1_decay: return "t1_decay";
        case TraceKind::t2_echo: return "t2_echo";
        case TraceKind::iv: return "iv";
        case TraceKind::didv: return "didv";
        case TraceKind::fluxmap_slice: return "fluxmap_slice";
    }
    return "unknown";
}

inline TraceKind trace_kind_from_string(std::string_view text) {
    for (auto k : {TraceKind::t1_decay, TraceKind::t2_echo, TraceKind::iv, TraceKind::didv, TraceKind::fluxmap_slice})
        if (to_string(k) == text) return k;
    throw ValidationError("unknown trace kind '" + std::string(text) + "'");
}

struct TraceMeta {
    std::string device_id;
    std::string timestamp;
};

/// Tagged (x, y) series. x is seconds for decays and volts for I-V data.
struct MeasurementTrace {
    TraceKind kind = TraceKind::t1_decay;
    std::vector<double> x;
    std::vector<double> y;
    TraceMeta meta;
};

inline void validate(const MeasurementTrace& t, std::size_t min_points = 2) {
    metkit::detail::require(t.x.size() == t.y.size(), "trace x and y lengths differ");
    metkit::detail::require(t.x.size() >= min_points,
                            "trace needs at least " + std::to_string(min_points) + " points");
    for (std::size_t i = 0; i < t.x.size(); ++i) {
        metkit::detail::require(std::isfinite(t.x[i]) && std::isfinite(t.y[i]),
                                "trace point " + std::to_string(i) + " is not finite");
        if (i > 0)
            metkit::detail::require(t.x[i] > t.x[i - 1],
                                    "trace x is not strictly increasing at point " + std::to_string(i));
    }
}

/// Minimum length accepted by the fitters.
inline constexpr std::size_t kMinFitPoints = 8;

}  // namespace metkit
