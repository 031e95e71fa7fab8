#pragma once

// Device registry -> per-device characterization rows, per-type medians,
// junction-loss projections and a provenance block. Output carries no
// timestamps and rows follow registry order, so identical inputs give
// byte-identical reports regardless of thread count.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metkit/csv_io.hpp"
#include "metkit/decay_fit.hpp"
#include "metkit/dynes_fit.hpp"
#include "metkit/error.hpp"
#include "metkit/json_io.hpp"
#include "metkit/loss_budget.hpp"
#include "metkit/parallel.hpp"
#include "metkit/stats.hpp"
#include "metkit/trace.hpp"

namespace metkit::io {

inline constexpr const char* kToolVersion = "metkit 0.1.0";

/// 64-bit FNV-1a, used to fingerprint inputs in the provenance block.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Json parse_json(const std::string& bytes, const std::string& source) {
    try {
        return Json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(source + ": invalid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Registry

struct TraceRef {
    TraceKind kind = TraceKind::t1_decay;
    std::string path;  // as written in the registry, relative to it
};

struct DeviceRecord {
    std::string id;
    std::string type;  // annealed | unannealed
    design::JunctionSpec junction;
    double f01_ghz = 0.0;
    double alpha_ghz = 0.0;
    std::optional<double> resonator_ghz;
    std::optional<double> coupling_mhz;  // metadata only
    std::optional<stats::SampleStats> t1_given_us;
    std::vector<double> t1_samples_us;
    std::optional<stats::SampleStats> t2_given_us;
    std::vector<double> t2_samples_us;
    std::vector<TraceRef> traces;
};

struct LossInputs {
    double p_jj = 0.0;
    double p_conv = 0.0;
    double area_met_um2 = 0.0;
    double area_conv_um2 = 0.0;
};

struct Registry {
    std::vector<DeviceRecord> devices;
    std::optional<LossInputs> loss;
    std::filesystem::path base_dir;
    std::string name;  // file name, for provenance
    std::string hash;
};

namespace detail {

inline std::optional<stats::SampleStats> given_summary(const Json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto& s = j.at(key);
    const std::string c = ctx + "." + key;
    return stats::given_stats(number(s, "best", c) / kMicrosecond, number(s, "mean", c) / kMicrosecond,
                              number(s, "std", c) / kMicrosecond);
}

inline std::vector<double> samples_us(const Json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) return {};
    auto v = number_list(j, key, ctx);
    for (double& x : v) x /= kMicrosecond;
    return v;
}

inline DeviceRecord device_from_json(const Json& j, const std::string& ctx) {
    DeviceRecord d;
    d.id = text(j, "id", ctx);
    if (d.id.empty() || d.id.find_first_of(",\r\n") != std::string::npos)
        throw ValidationError(ctx + ".id must be non-empty and free of commas and line breaks");
    d.type = text(j, "type", ctx);
    if (d.type != "annealed" && d.type != "unannealed")
        throw ValidationError(ctx + ".type must be 'annealed' or 'unannealed'");
    const auto& jj = field(j, "junction", ctx);
    const std::string jctx = ctx + ".junction";
    d.junction.area_um2 = number(jj, "area_m2", jctx) / kSquareMicron;
    d.junction.oxide_thickness_nm = number_or(jj, "oxide_thickness_m", 2e-9, jctx) / kNanometre;
    d.junction.eps_r = number_or(jj, "eps_r", 10.0, jctx);
    d.junction.rn_room_ohm = number_or(jj, "rn_room_ohm", 0.0, jctx);
    d.junction.cold_factor = number_or(jj, "cold_factor", 1.0, jctx);
    d.junction.gap_uev = number_or(jj, "gap_ev", 200e-6, jctx) / kMicroEv;
    if (!(d.junction.area_um2 > 0.0)) throw ValidationError(jctx + ".area_m2 must be positive");

    d.f01_ghz = number(j, "f01_hz", ctx) / kGhzToHz;
    d.alpha_ghz = number(j, "alpha_hz", ctx) / kGhzToHz;
    if (!(d.f01_ghz > 0.0)) throw ValidationError(ctx + ".f01_hz must be positive");
    if (!(d.alpha_ghz < 0.0)) throw ValidationError(ctx + ".alpha_hz must be negative (f12 - f01)");
    if (j.contains("resonator_hz")) d.resonator_ghz = number(j, "resonator_hz", ctx) / kGhzToHz;
    if (j.contains("coupling_hz")) d.coupling_mhz = number(j, "coupling_hz", ctx) * 1e-6;

    d.t1_given_us = given_summary(j, "t1_s", ctx);
    d.t1_samples_us = samples_us(j, "t1_samples_s", ctx);
    d.t2_given_us = given_summary(j, "t2_s", ctx);
    d.t2_samples_us = samples_us(j, "t2_samples_s", ctx);

    if (j.contains("traces")) {
        const auto& list = j.at("traces");
        if (!list.is_array()) throw ValidationError(ctx + ".traces must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string tctx = ctx + ".traces[" + std::to_string(i) + "]";
            d.traces.push_back({trace_kind_from_string(text(list[i], "kind", tctx)), text(list[i], "path", tctx)});
        }
    }
    return d;
}

}  // namespace detail

inline Registry registry_from_json(const Json& j, const std::filesystem::path& base_dir) {
    Registry r;
    r.base_dir = base_dir;
    const std::string ctx = "registry";
    if (!j.is_object()) throw ValidationError("registry must be a JSON object");
    if (j.contains("devices")) {
        const auto& list = j.at("devices");
        if (!list.is_array()) throw ValidationError("registry.devices must be an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < list.size(); ++i) {
            auto d = detail::device_from_json(list[i], ctx + ".devices[" + std::to_string(i) + "]");
            if (!ids.insert(d.id).second) throw ValidationError("registry: duplicate device id '" + d.id + "'");
            r.devices.push_back(std::move(d));
        }
    }
    if (j.contains("loss") && !j.at("loss").is_null()) {
        const auto& l = j.at("loss");
        const std::string lctx = ctx + ".loss";
        LossInputs in;
        in.p_jj = number(l, "p_jj", lctx);
        in.p_conv = number(l, "p_conv", lctx);
        in.area_met_um2 = number(l, "area_met_m2", lctx) / kSquareMicron;
        in.area_conv_um2 = number(l, "area_conv_m2", lctx) / kSquareMicron;
        r.loss = in;
    }
    return r;
}

inline Registry load_registry(const std::string& path) {
    const std::string bytes = read_file(path);
    const std::filesystem::path p(path);
    auto r = registry_from_json(parse_json(bytes, path), p.parent_path());
    r.name = p.filename().string();
    r.hash = hex64(fnv1a64(bytes));
    return r;
}

// ---------------------------------------------------------------------------
// Report

struct SisRow {
    std::string path;
    fit::DynesFit fit;
};

struct ReportRow {
    std::string id;
    std::string type;
    double area_um2 = 0.0;
    double f01_ghz = 0.0;
    double alpha_mhz = 0.0;  // negative
    std::optional<double> ej_over_ec;
    std::optional<stats::SampleStats> t1_us;
    std::optional<stats::SampleStats> t2_us;
    std::optional<double> t2_stretch_mean;
    std::optional<double> mean_q;
    std::vector<SisRow> sis;
    std::vector<std::string> flags;
};

struct TypeMedians {
    std::string type;
    std::size_t devices = 0;
    std::size_t with_t1 = 0;
    std::optional<double> median_t1_us;
    std::optional<double> median_q;
    std::string summary;
};

struct InputHash {
    std::string path;
    std::string fnv1a64;
};

struct Report {
    std::vector<ReportRow> rows;
    std::vector<TypeMedians> medians;
    Json loss = nullptr;
    std::vector<InputHash> inputs;
    Json config;
};

struct ReportOptions {
    unsigned threads = 1;
    double dynes_temperature_k = 0.02;
};

/// "3.8e5" style: two significant figures, compact exponent.
inline std::string compact_sci(double v) {
    if (v == 0.0) return "0";
    int exponent = static_cast<int>(std::floor(std::log10(std::abs(v))));
    double mantissa = v / std::pow(10.0, exponent);
    mantissa = std::round(mantissa * 10.0) / 10.0;
    if (std::abs(mantissa) >= 10.0) {
        mantissa /= 10.0;
        ++exponent;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fe%d", mantissa, exponent);
    return buf;
}

inline std::string two_sig(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2g", v);
    return buf;
}

namespace detail {

struct RowWork {
    ReportRow row;
    std::vector<InputHash> hashes;
};

inline RowWork build_row(const DeviceRecord& d, const Registry& reg, const ReportOptions& opt) {
    RowWork w;
    auto& row = w.row;
    row.id = d.id;
    row.type = d.type;
    row.area_um2 = d.junction.area_um2;
    row.f01_ghz = d.f01_ghz;
    row.alpha_mhz = d.alpha_ghz * 1e3;

    std::vector<double> t1 = d.t1_samples_us;
    std::vector<double> t2 = d.t2_samples_us;
    std::vector<double> stretches;
    for (const auto& ref : d.traces) {
        const auto full = reg.base_dir / ref.path;
        if (!std::filesystem::exists(full)) {
            row.flags.push_back("missing trace: " + ref.path);
            continue;
        }
        const std::string bytes = read_file(full);
        w.hashes.push_back({ref.path, hex64(fnv1a64(bytes))});
        std::istringstream in(bytes);
        const auto trace = read_trace_csv(in, ref.kind, ref.path);
        try {
            switch (ref.kind) {
                case TraceKind::t1_decay: t1.push_back(fit::fit_t1(trace).tau_us); break;
                case TraceKind::t2_echo: {
                    const auto f = fit::fit_t2_stretched(trace);
                    t2.push_back(f.tau_us);
                    stretches.push_back(f.stretch);
                    break;
                }
                case TraceKind::iv:
                case TraceKind::didv: {
                    fit::DynesOptions dopt;
                    dopt.temperature_k = opt.dynes_temperature_k;
                    row.sis.push_back({ref.path, fit::fit_dynes(trace, dopt)});
                    break;
                }
                case TraceKind::fluxmap_slice: row.flags.push_back("fluxmap slice not summarized: " + ref.path); break;
            }
        } catch (const ComputationError& e) {
            row.flags.push_back(std::string(to_string(ref.kind)) + " fit failed (" + ref.path + "): " + e.what());
        } catch (const ValidationError& e) {
            row.flags.push_back(std::string(to_string(ref.kind)) + " fit rejected (" + ref.path + "): " + e.what());
        }
    }

    if (!t1.empty())
        row.t1_us = stats::sample_stats(t1);
    else if (d.t1_given_us)
        row.t1_us = d.t1_given_us;
    if (!t2.empty())
        row.t2_us = stats::sample_stats(t2);
    else if (d.t2_given_us)
        row.t2_us = d.t2_given_us;
    if (!stretches.empty()) row.t2_stretch_mean = std::accumulate(stretches.begin(), stretches.end(), 0.0) / stretches.size();

    if (row.t1_us) {
        if (row.t1_us->insufficient) row.flags.emplace_back("insufficient T1 samples");
        row.mean_q = loss::q_from_t1(row.f01_ghz, row.t1_us->mean);
    } else {
        row.flags.emplace_back("no T1 data");
    }
    if (row.t2_us && row.t2_us->insufficient) row.flags.emplace_back("insufficient T2 samples");
    try {
        const auto p = qubit::invert_spectroscopy(row.f01_ghz, d.alpha_ghz);
        row.ej_over_ec = p.e_j / p.e_c;
    } catch (const std::exception& e) {
        row.flags.push_back(std::string("E_J/E_C inversion failed: ") + e.what());
    }
    return w;
}

}  // namespace detail

inline Report generate_report(const Registry& reg, const ReportOptions& opt = {}) {
    Report rep;
    std::vector<detail::RowWork> work(reg.devices.size());
    parallel_for(reg.devices.size(), opt.threads,
                 [&](std::size_t i) { work[i] = detail::build_row(reg.devices[i], reg, opt); });

    if (!reg.name.empty()) rep.inputs.push_back({reg.name, reg.hash});
    for (auto& w : work) {
        rep.rows.push_back(std::move(w.row));
        for (auto& h : w.hashes) rep.inputs.push_back(std::move(h));
    }

    for (const char* type : {"annealed", "unannealed"}) {
        TypeMedians m;
        m.type = type;
        std::vector<double> t1, q;
        for (const auto& r : rep.rows) {
            if (r.type != type) continue;
            ++m.devices;
            if (r.t1_us) {
                t1.push_back(r.t1_us->mean);
                q.push_back(*r.mean_q);
            }
        }
        if (m.devices == 0) continue;
        m.with_t1 = t1.size();
        if (!t1.empty()) {
            m.median_t1_us = stats::median(t1);
            m.median_q = stats::median(q);
            m.summary = std::string(type) + ": median T1 " + two_sig(*m.median_t1_us) + " μs, median Q " +
                        compact_sci(*m.median_q) + " (n = " + std::to_string(m.with_t1) + ")";
        } else {
            m.summary = std::string(type) + ": no T1 data (n = 0)";
        }
        rep.medians.push_back(std::move(m));
    }

    if (reg.loss) {
        const ReportRow* best_q = nullptr;
        const ReportRow* best_t1 = nullptr;
        for (const auto& r : rep.rows) {
            if (!r.t1_us) continue;
            if (!best_q || *r.mean_q > *best_q->mean_q) best_q = &r;
            if (!best_t1 || r.t1_us->mean > best_t1->t1_us->mean) best_t1 = &r;
        }
        if (best_q) {
            const auto& l = *reg.loss;
            const double bound = loss::junction_loss_bound(*best_q->mean_q, l.p_jj);
            const auto proj = loss::project(best_t1->t1_us->mean, l.p_jj, l.p_conv, l.area_met_um2, l.area_conv_um2);
            rep.loss = Json{{"tan_delta_bound",
                             Json{{"device", best_q->id},
                                  {"mean_q", *best_q->mean_q},
                                  {"p_jj", l.p_jj},
                                  {"value", bound},
                                  {"text", "tan δ_JJ " + loss::format_upper_bound(bound)}}},
                            {"projection", Json{{"device", best_t1->id}, {"mean_t1_s", best_t1->t1_us->mean * kMicrosecond}}}};
            const Json proj_json = to_json(proj);
            for (const auto& [k, v] : proj_json.items()) rep.loss["projection"][k] = v;
        }
    }

    rep.config = Json{{"dynes_temperature_k", opt.dynes_temperature_k},
                      {"t2_model", "stretched exponential, n free in [0.5, 3]"},
                      {"std_estimator", "sample (N - 1)"}};
    return rep;
}

// ---------------------------------------------------------------------------
// Rendering

inline constexpr const char* kReportCsvHeader =
    "qubit_id,jj_area_um2,f01_ghz,alpha_over_2pi_mhz,ej_over_ec,t1_best_us,t1_mean_us,t1_std_us,"
    "t2_best_us,t2_mean_us,t2_std_us,mean_q_m,type";

inline Json to_json(const Report& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        Json row{{"qubit_id", r.id},
                 {"jj_area_m2", r.area_um2 * kSquareMicron},
                 {"f01_hz", r.f01_ghz * kGhzToHz},
                 {"alpha_over_2pi_hz", -r.alpha_mhz * 1e6},
                 {"ej_over_ec", optional_json(r.ej_over_ec)},
                 {"t1", r.t1_us ? to_json(*r.t1_us) : Json(nullptr)},
                 {"t2_echo", r.t2_us ? to_json(*r.t2_us) : Json(nullptr)},
                 {"mean_q", optional_json(r.mean_q)},
                 {"type", r.type}};
        if (r.t2_stretch_mean) row["t2_stretch_mean"] = *r.t2_stretch_mean;
        if (!r.sis.empty()) {
            Json sis = Json::array();
            for (const auto& s : r.sis) {
                sis.push_back(Json{{"path", s.path},
                                   {"gap_ev", s.fit.gap_uev * kMicroEv},
                                   {"gamma_ev", s.fit.gamma_uev * kMicroEv},
                                   {"rn_ohm", s.fit.rn_ohm},
                                   {"subgap_ratio", s.fit.subgap_ratio}});
            }
            row["sis_fits"] = sis;
        }
        row["flags"] = r.flags;
        rows.push_back(std::move(row));
    }
    Json medians = Json::array();
    for (const auto& m : rep.medians) {
        medians.push_back(Json{{"type", m.type},
                               {"devices", m.devices},
                               {"with_t1", m.with_t1},
                               {"median_t1_s", m.median_t1_us ? Json(*m.median_t1_us * kMicrosecond) : Json(nullptr)},
                               {"median_q", optional_json(m.median_q)},
                               {"summary", m.summary}});
    }
    Json inputs = Json::array();
    for (const auto& h : rep.inputs) inputs.push_back(Json{{"path", h.path}, {"fnv1a64", h.fnv1a64}});
    return Json{{"rows", rows},
                {"medians", medians},
                {"loss", rep.loss},
                {"provenance", Json{{"tool", kToolVersion}, {"inputs", inputs}, {"config", rep.config}}}};
}

inline void write_report_csv(std::ostream& out, const Report& rep) {
    auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    out << kReportCsvHeader << '\n';
    for (const auto& r : rep.rows) {
        const auto t1 = r.t1_us;
        const auto t2 = r.t2_us;
        out << r.id << ',' << format_number(r.area_um2) << ',' << format_number(r.f01_ghz) << ','
            << format_number(-r.alpha_mhz) << ',' << cell(r.ej_over_ec) << ','
            << cell(t1 ? std::optional(t1->best) : std::nullopt) << ','
            << cell(t1 ? std::optional(t1->mean) : std::nullopt) << ','
            << cell(t1 ? std::optional(t1->std) : std::nullopt) << ','
            << cell(t2 ? std::optional(t2->best) : std::nullopt) << ','
            << cell(t2 ? std::optional(t2->mean) : std::nullopt) << ','
            << cell(t2 ? std::optional(t2->std) : std::nullopt) << ','
            << cell(r.mean_q ? std::optional(*r.mean_q * 1e-6) : std::nullopt) << ',' << r.type << '\n';
    }
}

}  // namespace metkit::io
