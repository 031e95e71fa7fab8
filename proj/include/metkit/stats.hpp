#pragma once

// Per-device coherence summaries in the layout of a qubit characterization
// table: best / mean / sample std of T1 and T2, mean Q and E_J/E_C.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/loss_budget.hpp"
#include "metkit/qubit_core.hpp"

namespace metkit::stats {

struct SampleStats {
    double best = 0.0;
    double mean = 0.0;
    double std = 0.0;  // N - 1 denominator; 0 for a single sample
    std::size_t count = 0;
    bool insufficient = false;  // fewer than two samples, std undefined
};

inline SampleStats sample_stats(std::span<const double> x) {
    metkit::detail::require(!x.empty(), "sample is empty");
    for (double v : x) metkit::detail::require(std::isfinite(v) && v >= 0.0, "samples must be finite and non-negative");
    SampleStats s;
    s.count = x.size();
    s.best = *std::max_element(x.begin(), x.end());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    if (x.size() < 2) {
        s.insufficient = true;
        return s;
    }
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(x.size() - 1));
    return s;
}

/// Summary given directly (published tables carry no raw samples).
inline SampleStats given_stats(double best, double mean, double std) {
    metkit::detail::require(std::isfinite(best) && std::isfinite(mean) && std::isfinite(std) && mean >= 0.0 && std >= 0.0,
                            "summary statistics must be finite and non-negative");
    metkit::detail::require(best >= mean, "best must not be below the mean");
    return {best, mean, std, 0, false};
}

inline double median(std::vector<double> x) {
    metkit::detail::require(!x.empty(), "median of an empty set");
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

struct DeviceSummary {
    std::string id;
    double f01_ghz = 0.0;
    double alpha_mhz = 0.0;  // f12 - f01, negative for a transmon
    std::optional<double> ej_over_ec;
    SampleStats t1_us;
    std::optional<SampleStats> t2_us;
    double mean_q = 0.0;
    std::vector<std::string> flags;
};

/// Fills mean Q and, where the spectroscopy allows, E_J/E_C by inversion.
inline void complete(DeviceSummary& d) {
    d.mean_q = loss::q_from_t1(d.f01_ghz, d.t1_us.mean);
    if (d.t1_us.insufficient) d.flags.emplace_back("insufficient T1 samples");
    if (d.t2_us && d.t2_us->insufficient) d.flags.emplace_back("insufficient T2 samples");
    try {
        const auto p = qubit::invert_spectroscopy(d.f01_ghz, d.alpha_mhz * 1e-3);
        d.ej_over_ec = p.e_j / p.e_c;
    } catch (const std::exception& e) {
        d.ej_over_ec.reset();
        d.flags.emplace_back(std::string("E_J/E_C inversion failed: ") + e.what());
    }
}

inline DeviceSummary summarize_device(std::string id, std::span<const double> t1_us, std::span<const double> t2_us,
                                      double f01_ghz, double alpha_mhz) {
    metkit::detail::require(!t1_us.empty(), "T1 sample is empty");
    metkit::detail::require(std::isfinite(f01_ghz) && f01_ghz > 0.0, "f01 must be positive");
    metkit::detail::require(std::isfinite(alpha_mhz), "alpha must be finite");
    DeviceSummary d;
    d.id = std::move(id);
    d.f01_ghz = f01_ghz;
    d.alpha_mhz = alpha_mhz;
    d.t1_us = sample_stats(t1_us);
    if (!t2_us.empty()) d.t2_us = sample_stats(t2_us);
    complete(d);
    return d;
}

}  // namespace metkit::stats
