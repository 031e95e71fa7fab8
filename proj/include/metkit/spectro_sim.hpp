#pragma once

// Flux-map spectroscopy of a tunable two-junction qubit with embedded TLS
// defects, plus an avoided-crossing detector for the resulting maps.
//
// Each bias point fixes the SQUID flux, hence E_J and the bare f01. The qubit
// and the defects form a single-excitation arrowhead Hamiltonian
//
//   H = [ f01  g1  g2 ... ]
//       [ g1   f1         ]
//       [ g2       f2     ]
//
// whose eigenvalues are the branch frequencies. A branch is drawn as a
// Lorentzian weighted by its qubit content, since only that part is driven.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/parallel.hpp"
#include "metkit/qubit_core.hpp"

namespace metkit::sim {

struct TlsDefect {
    double frequency_ghz = 0.0;
    double coupling_ghz = 0.0;  // g, half the resonant splitting
    std::string label;
};

/// flux (in flux quanta) = k * bias + offset
struct FluxTransfer {
    double k_phi0_per_a = 0.0;
    double offset_phi0 = 0.0;

    [[nodiscard]] double flux(double bias_a) const { return k_phi0_per_a * bias_a + offset_phi0; }
};

struct FluxMapConfig {
    std::vector<double> bias_a;
    FluxTransfer transfer;
    qubit::SquidParams squid;  // flux is overwritten per bias point
    double e_c_ghz = 0.0;
    std::vector<double> freq_ghz;
    double linewidth_ghz = 0.0;  // Lorentzian FWHM
    double noise = 0.0;          // Gaussian sigma on the amplitude
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Eigen-branches at every bias point, ascending in frequency.
struct Branches {
    std::vector<double> bias_a;
    std::vector<double> bare_f01_ghz;
    std::vector<std::vector<double>> freq_ghz;
    std::vector<std::vector<double>> qubit_weight;
};

struct FluxMap {
    std::vector<double> bias_a;
    std::vector<double> freq_ghz;
    std::vector<double> amplitude;  // row-major: amplitude[b * freq.size() + f]
    Branches branches;
    double noise = 0.0;
    std::vector<std::string> flagged;  // defects whose frequency lies outside the grid

    [[nodiscard]] double at(std::size_t b, std::size_t f) const { return amplitude[b * freq_ghz.size() + f]; }
};

inline void validate_grid(const std::vector<double>& g, const char* what, std::size_t min_size) {
    metkit::detail::require(g.size() >= min_size,
                            std::string(what) + " needs at least " + std::to_string(min_size) + " points");
    for (std::size_t i = 0; i < g.size(); ++i) {
        metkit::detail::require(std::isfinite(g[i]), std::string(what) + " contains a non-finite value");
        if (i > 0) metkit::detail::require(g[i] > g[i - 1], std::string(what) + " is not strictly increasing");
    }
}

inline void validate(const FluxMapConfig& c) {
    using metkit::detail::require;
    validate_grid(c.bias_a, "bias grid", 3);
    validate_grid(c.freq_ghz, "frequency grid", 3);
    require(std::isfinite(c.transfer.k_phi0_per_a) && c.transfer.k_phi0_per_a != 0.0, "flux transfer k must be nonzero");
    require(std::isfinite(c.transfer.offset_phi0), "flux offset must be finite");
    require(c.squid.e_j_sum > 0.0 && std::isfinite(c.squid.e_j_sum), "SQUID E_J sum must be positive");
    require(c.squid.asymmetry >= 0.0 && c.squid.asymmetry < 1.0, "SQUID asymmetry must lie in [0, 1)");
    require(c.e_c_ghz > 0.0 && std::isfinite(c.e_c_ghz), "E_C must be positive");
    require(c.linewidth_ghz > 0.0 && std::isfinite(c.linewidth_ghz), "linewidth must be positive");
    require(c.noise >= 0.0 && std::isfinite(c.noise), "noise amplitude must be non-negative");
}

inline void validate(const TlsDefect& d) {
    metkit::detail::require(std::isfinite(d.frequency_ghz) && d.frequency_ghz > 0.0, "defect frequency must be positive");
    metkit::detail::require(std::isfinite(d.coupling_ghz) && d.coupling_ghz > 0.0, "defect coupling must be positive");
}

/// Bare qubit f01 at one bias point.
inline double bare_f01(const FluxMapConfig& c, double bias_a) {
    qubit::SquidParams s = c.squid;
    s.flux = c.transfer.flux(bias_a);
    const double e_j = qubit::squid_effective_ej(s);
    // Relative floor: cos(pi / 2) is not exactly zero in floating point.
    if (!(e_j > 1e-9 * c.squid.e_j_sum)) throw ValidationError("SQUID is fully frustrated at bias " + std::to_string(bias_a) + " A");
    return qubit::spectrum({e_j, c.e_c_ghz}).f01;
}

struct CoupledLevels {
    std::vector<double> freq_ghz;
    std::vector<double> qubit_weight;
};

/// Eigen-decomposition of the qubit + defects single-excitation Hamiltonian.
inline CoupledLevels coupled_levels(double f01_ghz, const std::vector<TlsDefect>& defects) {
    const auto n = static_cast<Eigen::Index>(defects.size() + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    h(0, 0) = f01_ghz;
    for (Eigen::Index k = 1; k < n; ++k) {
        const auto& d = defects[static_cast<std::size_t>(k - 1)];
        h(k, k) = d.frequency_ghz;
        h(0, k) = h(k, 0) = d.coupling_ghz;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    CoupledLevels out;
    for (Eigen::Index k = 0; k < n; ++k) {
        out.freq_ghz.push_back(eig.eigenvalues()(k));
        const double v = eig.eigenvectors()(0, k);
        out.qubit_weight.push_back(v * v);
    }
    return out;
}

namespace detail {

inline double lorentzian(double df, double fwhm) {
    const double x = 2.0 * df / fwhm;
    return 1.0 / (1.0 + x * x);
}

// Noise for one bias column depends only on (seed, column index).
inline std::mt19937_64 column_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace detail

/// Exact branches at every bias point; the expensive, noise-free half of a map.
inline Branches simulate_branches(const FluxMapConfig& c, const std::vector<TlsDefect>& defects) {
    validate(c);
    for (const auto& d : defects) validate(d);
    const std::size_t nb = c.bias_a.size();
    Branches out;
    out.bias_a = c.bias_a;
    out.bare_f01_ghz.assign(nb, 0.0);
    out.freq_ghz.resize(nb);
    out.qubit_weight.resize(nb);
    parallel_for(nb, c.threads, [&](std::size_t b) {
        out.bare_f01_ghz[b] = bare_f01(c, c.bias_a[b]);
        auto levels = coupled_levels(out.bare_f01_ghz[b], defects);
        out.freq_ghz[b] = std::move(levels.freq_ghz);
        out.qubit_weight[b] = std::move(levels.qubit_weight);
    });
    return out;
}

/// Draws branches as qubit-weighted Lorentzians on the frequency grid and adds
/// the seeded noise. Column b's noise depends only on (seed, b).
inline FluxMap render_fluxmap(const FluxMapConfig& c, Branches branches) {
    validate(c);
    metkit::detail::require(branches.bias_a == c.bias_a && branches.freq_ghz.size() == c.bias_a.size() &&
                                branches.qubit_weight.size() == c.bias_a.size(),
                            "branches were computed on a different bias grid");
    const std::size_t nb = c.bias_a.size();
    const std::size_t nf = c.freq_ghz.size();
    FluxMap map;
    map.bias_a = c.bias_a;
    map.freq_ghz = c.freq_ghz;
    map.noise = c.noise;
    map.amplitude.assign(nb * nf, 0.0);
    parallel_for(nb, c.threads, [&](std::size_t b) {
        const auto& freq = branches.freq_ghz[b];
        const auto& weight = branches.qubit_weight[b];
        double* row = map.amplitude.data() + b * nf;
        for (std::size_t f = 0; f < nf; ++f) {
            double a = 0.0;
            for (std::size_t k = 0; k < freq.size(); ++k)
                a += weight[k] * detail::lorentzian(c.freq_ghz[f] - freq[k], c.linewidth_ghz);
            row[f] = a;
        }
        if (c.noise > 0.0) {
            auto rng = detail::column_rng(c.seed, b);
            std::normal_distribution<double> gauss(0.0, c.noise);
            for (std::size_t f = 0; f < nf; ++f) row[f] += gauss(rng);
        }
    });
    map.branches = std::move(branches);
    return map;
}

inline FluxMap simulate_fluxmap(const FluxMapConfig& c, const std::vector<TlsDefect>& defects) {
    auto map = render_fluxmap(c, simulate_branches(c, defects));
    for (const auto& d : defects) {
        if (d.frequency_ghz < c.freq_ghz.front() || d.frequency_ghz > c.freq_ghz.back())
            map.flagged.push_back(d.label.empty() ? std::to_string(d.frequency_ghz) + " GHz" : d.label);
    }
    return map;
}

// ---------------------------------------------------------------------------
// Crossing detection

struct Crossing {
    double bias_a = 0.0;
    double center_ghz = 0.0;
    double splitting_ghz = 0.0;
};

struct CrossingReport {
    std::vector<Crossing> crossings;
    double bandwidth_ghz = 0.0;
    std::optional<double> area_um2;
    std::optional<double> density;  // per um^2 per GHz; needs an area
    double threshold_ghz = 0.0;
};

struct DetectorOptions {
    std::optional<double> threshold_ghz;  // default: 2 frequency-grid steps for maps
    std::optional<double> area_um2;
    double min_weight = 0.1;        // branch visibility for exact branches
    double relative_level = 0.15;   // peak floor as a fraction of the column maximum
    double noise_level = 3.0;       // peak floor in units of the map noise
    double prominence = 1.2;        // gap must rise by this factor on both sides
    std::size_t smooth = 3;         // boxcar width applied to map columns (1 = off)
    std::size_t min_run = 3;        // consecutive multi-peak columns for maps
};

/// count / (area * bandwidth)
inline double tls_density(double count, double area_um2, double bandwidth_ghz) {
    metkit::detail::require(count >= 0.0 && std::isfinite(count), "crossing count must be non-negative");
    metkit::detail::require(area_um2 > 0.0 && std::isfinite(area_um2), "junction area must be positive");
    metkit::detail::require(bandwidth_ghz > 0.0 && std::isfinite(bandwidth_ghz), "bandwidth must be positive");
    return count / (area_um2 * bandwidth_ghz);
}

namespace detail {

// Vertex of the parabola through three points; nullopt if not a minimum.
inline std::optional<std::pair<double, double>> parabola_vertex(double x0, double y0, double x1, double y1, double x2,
                                                                double y2) {
    const double d1 = (y1 - y0) / (x1 - x0);
    const double d2 = (y2 - y1) / (x2 - x1);
    const double a = (d2 - d1) / (x2 - x0);
    if (!(a > 0.0)) return std::nullopt;
    // Newton form p(x) = y0 + d1 (x - x0) + a (x - x0)(x - x1).
    const double xv = 0.5 * (x0 + x1) - d1 / (2.0 * a);
    if (!(xv >= x0 && xv <= x2)) return std::nullopt;
    return std::make_pair(xv, y0 + d1 * (xv - x0) + a * (xv - x0) * (xv - x1));
}

inline std::vector<double> boxcar(const double* row, std::size_t n, std::size_t width) {
    std::vector<double> out(row, row + n);
    if (width <= 1) return out;
    const std::size_t half = width / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i >= half ? i - half : 0;
        const std::size_t b = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = a; j <= b; ++j) sum += row[j];
        out[i] = sum / static_cast<double>(b - a + 1);
    }
    return out;
}

// Local maxima of one (smoothed) column above `level`, refined parabolically
// and merged when no clear dip separates them.
inline std::vector<double> column_peaks(const std::vector<double>& freq, const std::vector<double>& y, double level) {
    const std::size_t nf = freq.size();
    std::vector<std::size_t> idx;
    for (std::size_t f = 1; f + 1 < nf; ++f) {
        if (y[f] > level && y[f] > y[f - 1] && y[f] >= y[f + 1]) idx.push_back(f);
    }
    // A neighbour only counts as a separate peak if the valley drops below
    // half the smaller height.
    std::vector<std::size_t> kept;
    for (std::size_t f : idx) {
        if (!kept.empty()) {
            const std::size_t p = kept.back();
            double valley = std::numeric_limits<double>::infinity();
            for (std::size_t j = p; j <= f; ++j) valley = std::min(valley, y[j]);
            if (valley > 0.5 * std::min(y[p], y[f])) {
                if (y[f] > y[p]) kept.back() = f;
                continue;
            }
        }
        kept.push_back(f);
    }
    std::vector<double> peaks;
    for (std::size_t f : kept) {
        const double x0 = freq[f - 1], x1 = freq[f], x2 = freq[f + 1];
        const double y0 = y[f - 1], y1 = y[f], y2 = y[f + 1];
        // Maximum of the parabola: negate to reuse the minimum helper.
        const auto v = parabola_vertex(x0, -y0, x1, -y1, x2, -y2);
        peaks.push_back(v ? v->first : x1);
    }
    return peaks;
}

struct ColumnGap {
    double gap = std::numeric_limits<double>::infinity();
    double center = 0.0;
};

inline ColumnGap smallest_gap(const std::vector<double>& peaks) {
    ColumnGap g;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        const double d = peaks[i + 1] - peaks[i];
        if (d < g.gap) {
            g.gap = d;
            g.center = 0.5 * (peaks[i + 1] + peaks[i]);
        }
    }
    return g;
}

inline std::vector<Crossing> find_gap_minima(const std::vector<double>& bias, const std::vector<std::vector<double>>& peaks,
                                             double threshold, const DetectorOptions& opt, std::size_t min_run) {
    const std::size_t nb = bias.size();
    std::vector<ColumnGap> gaps(nb);
    for (std::size_t b = 0; b < nb; ++b) gaps[b] = smallest_gap(peaks[b]);

    std::vector<Crossing> out;
    std::size_t b = 0;
    while (b < nb) {
        if (!std::isfinite(gaps[b].gap)) {
            ++b;
            continue;
        }
        std::size_t end = b;
        while (end < nb && std::isfinite(gaps[end].gap)) ++end;
        if (end - b >= min_run) {
            for (std::size_t i = b; i < end; ++i) {
                const double g = gaps[i].gap;
                const bool left_ok = i == b || g < gaps[i - 1].gap;
                const bool right_ok = i + 1 == end || g <= gaps[i + 1].gap;
                if (!left_ok || !right_ok) continue;
                // Prominence: the gap must open up on both sides within the run.
                double left_max = g, right_max = g;
                for (std::size_t j = b; j < i; ++j) left_max = std::max(left_max, gaps[j].gap);
                for (std::size_t j = i + 1; j < end; ++j) right_max = std::max(right_max, gaps[j].gap);
                if (left_max < opt.prominence * g || right_max < opt.prominence * g) continue;

                Crossing c{bias[i], gaps[i].center, g};
                if (i > b && i + 1 < end) {
                    const auto v = parabola_vertex(bias[i - 1], gaps[i - 1].gap, bias[i], g, bias[i + 1], gaps[i + 1].gap);
                    if (v && v->second > 0.0 && v->second <= g) {
                        c.bias_a = v->first;
                        c.splitting_ghz = v->second;
                    }
                }
                if (c.splitting_ghz >= threshold) out.push_back(c);
            }
        }
        b = end;
    }
    return out;
}

inline CrossingReport finish_report(std::vector<Crossing> crossings, double bandwidth, double threshold,
                                    const DetectorOptions& opt) {
    CrossingReport r;
    r.crossings = std::move(crossings);
    r.bandwidth_ghz = bandwidth;
    r.threshold_ghz = threshold;
    r.area_um2 = opt.area_um2;
    if (opt.area_um2 && bandwidth > 0.0) r.density = tls_density(static_cast<double>(r.crossings.size()), *opt.area_um2, bandwidth);
    return r;
}

}  // namespace detail

/// Mean spacing of a frequency grid.
inline double frequency_step(const std::vector<double>& freq) {
    return (freq.back() - freq.front()) / static_cast<double>(freq.size() - 1);
}

/// Avoided crossings in a rendered map.
inline CrossingReport detect_crossings(const FluxMap& m, const DetectorOptions& opt = {}) {
    validate_grid(m.bias_a, "bias grid", 3);
    validate_grid(m.freq_ghz, "frequency grid", 3);
    metkit::detail::require(m.amplitude.size() == m.bias_a.size() * m.freq_ghz.size(),
                            "map amplitude size does not match its grids");
    const double step = frequency_step(m.freq_ghz);
    const double threshold = opt.threshold_ghz.value_or(2.0 * step);
    metkit::detail::require(threshold >= 0.0, "detection threshold must be non-negative");

    const std::size_t nf = m.freq_ghz.size();
    const double width = static_cast<double>(std::max<std::size_t>(1, opt.smooth | 1));
    const double noise = m.noise / std::sqrt(width);  // boxcar reduces white noise by sqrt(width)
    std::vector<std::vector<double>> peaks(m.bias_a.size());
    for (std::size_t b = 0; b < m.bias_a.size(); ++b) {
        const auto y = detail::boxcar(m.amplitude.data() + b * nf, nf, static_cast<std::size_t>(width));
        const double top = *std::max_element(y.begin(), y.end());
        const double level = std::max(opt.noise_level * noise, opt.relative_level * top);
        peaks[b] = detail::column_peaks(m.freq_ghz, y, level);
    }
    auto found = detail::find_gap_minima(m.bias_a, peaks, threshold, opt, opt.min_run);
    return detail::finish_report(std::move(found), m.freq_ghz.back() - m.freq_ghz.front(), threshold, opt);
}

/// Avoided crossings among exact branches, keeping those with visible qubit weight.
inline CrossingReport detect_crossings(const Branches& br, const DetectorOptions& opt = {}) {
    validate_grid(br.bias_a, "bias grid", 3);
    metkit::detail::require(br.freq_ghz.size() == br.bias_a.size() && br.qubit_weight.size() == br.bias_a.size(),
                            "branch data does not match the bias grid");
    const double threshold = opt.threshold_ghz.value_or(0.0);
    std::vector<std::vector<double>> peaks(br.bias_a.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t b = 0; b < br.bias_a.size(); ++b) {
        for (std::size_t k = 0; k < br.freq_ghz[b].size(); ++k) {
            if (br.qubit_weight[b][k] >= opt.min_weight) peaks[b].push_back(br.freq_ghz[b][k]);
            lo = std::min(lo, br.freq_ghz[b][k]);
            hi = std::max(hi, br.freq_ghz[b][k]);
        }
        std::sort(peaks[b].begin(), peaks[b].end());
    }
    auto found = detail::find_gap_minima(br.bias_a, peaks, threshold, opt, 1);
    return detail::finish_report(std::move(found), hi > lo ? hi - lo : 0.0, threshold, opt);
}

// ---------------------------------------------------------------------------
// Flux-transfer calibration

/// Recovers (k, offset) from the periodicity of the qubit branch: successive
/// maxima of f01 sit one flux quantum apart at integer flux.
inline FluxTransfer estimate_flux_transfer(const std::vector<double>& bias_a, const std::vector<double>& f01_ghz) {
    validate_grid(bias_a, "bias grid", 3);
    metkit::detail::require(f01_ghz.size() == bias_a.size(), "frequency trace does not match the bias grid");
    std::vector<double> tops;
    for (std::size_t i = 1; i + 1 < bias_a.size(); ++i) {
        if (f01_ghz[i] > f01_ghz[i - 1] && f01_ghz[i] >= f01_ghz[i + 1]) {
            const auto v = detail::parabola_vertex(bias_a[i - 1], -f01_ghz[i - 1], bias_a[i], -f01_ghz[i], bias_a[i + 1],
                                                   -f01_ghz[i + 1]);
            tops.push_back(v ? v->first : bias_a[i]);
        }
    }
    if (tops.size() < 2) throw ComputationError("need at least two tuning-curve maxima to fix the flux period");
    const double period = (tops.back() - tops.front()) / static_cast<double>(tops.size() - 1);
    FluxTransfer t;
    t.k_phi0_per_a = 1.0 / period;
    // The first maximum sits at an integer flux; pick the offset in (-0.5, 0.5].
    double offset = -t.k_phi0_per_a * tops.front();
    offset -= std::round(offset);
    t.offset_phi0 = offset;
    return t;
}

/// Strongest peak per column, a proxy for the qubit branch in a measured map.
inline std::vector<double> column_maxima(const FluxMap& m) {
    std::vector<double> out(m.bias_a.size());
    const std::size_t nf = m.freq_ghz.size();
    for (std::size_t b = 0; b < m.bias_a.size(); ++b) {
        std::size_t best = 0;
        for (std::size_t f = 1; f < nf; ++f)
            if (m.at(b, f) > m.at(b, best)) best = f;
        out[b] = m.freq_ghz[best];
        if (best > 0 && best + 1 < nf) {
            const auto v = detail::parabola_vertex(m.freq_ghz[best - 1], -m.at(b, best - 1), m.freq_ghz[best], -m.at(b, best),
                                                   m.freq_ghz[best + 1], -m.at(b, best + 1));
            if (v) out[b] = v->first;
        }
    }
    return out;
}

}  // namespace metkit::sim
