#pragma once

// Trace and flux-map CSV files. Headers are fixed per kind so files move
// between tools without a schema. Lines starting with '#' carry metadata as
// "# key: value"; values are written with 17 significant digits, which makes
// write -> parse an exact round trip.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "metkit/error.hpp"
#include "metkit/spectro_sim.hpp"
#include "metkit/trace.hpp"

namespace metkit::io {

inline std::string_view csv_header(TraceKind kind) {
    switch (kind) {
        case TraceKind::t1_decay:
        case TraceKind::t2_echo: return "delay_s,p1";
        case TraceKind::iv: return "voltage_V,current_A";
        case TraceKind::didv: return "voltage_V,conductance_S";
        case TraceKind::fluxmap_slice: return "freq_GHz,amplitude";
    }
    return "";
}

inline constexpr std::string_view kFluxMapHeader = "bias_A,freq_GHz,amplitude";

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

inline double parse_number(std::string_view field, const std::string& source, std::size_t line) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ValidationError(where(source, line) + "cannot parse '" + std::string(field) + "' as a number");
    if (!std::isfinite(value)) throw ValidationError(where(source, line) + "non-finite value '" + std::string(field) + "'");
    return value;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct Table {
    std::map<std::string, std::string> meta;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  // source line of each row
};

inline Table read_table(std::istream& in, std::string_view header, const std::string& source) {
    Table t;
    const std::size_t columns = split(header).size();
    bool seen_header = false;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto text = trim(raw);
        if (text.empty()) continue;
        if (text.front() == '#') {
            const auto body = trim(text.substr(1));
            const auto colon = body.find(':');
            if (colon != std::string_view::npos)
                t.meta[std::string(trim(body.substr(0, colon)))] = std::string(trim(body.substr(colon + 1)));
            continue;
        }
        if (!seen_header) {
            if (text != header)
                throw ValidationError(where(source, line) + "expected header '" + std::string(header) + "', found '" +
                                      std::string(text) + "'");
            seen_header = true;
            continue;
        }
        const auto fields = split(text);
        if (fields.size() != columns)
            throw ValidationError(where(source, line) + "expected " + std::to_string(columns) + " fields, found " +
                                  std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(columns);
        for (auto f : fields) row.push_back(parse_number(f, source, line));
        t.rows.push_back(std::move(row));
        t.lines.push_back(line);
    }
    if (!seen_header) throw ValidationError(source + ": missing header '" + std::string(header) + "'");
    return t;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

}  // namespace detail

inline MeasurementTrace read_trace_csv(std::istream& in, TraceKind kind, const std::string& source = "<stream>") {
    auto table = detail::read_table(in, csv_header(kind), source);
    MeasurementTrace t;
    t.kind = kind;
    if (auto it = table.meta.find("device_id"); it != table.meta.end()) t.meta.device_id = it->second;
    if (auto it = table.meta.find("timestamp"); it != table.meta.end()) t.meta.timestamp = it->second;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (i > 0 && !(table.rows[i][0] > table.rows[i - 1][0]))
            throw ValidationError(detail::where(source, table.lines[i]) + "x is not strictly increasing");
        t.x.push_back(table.rows[i][0]);
        t.y.push_back(table.rows[i][1]);
    }
    return t;
}

inline MeasurementTrace parse_trace_csv(const std::string& path, TraceKind kind) {
    auto in = detail::open_input(path);
    return read_trace_csv(in, kind, path);
}

/// Guesses the kind of an I-V style file from its header line.
inline TraceKind sniff_sis_kind(const std::string& path) {
    auto in = detail::open_input(path);
    std::string raw;
    while (std::getline(in, raw)) {
        const auto text = detail::trim(raw);
        if (text.empty() || text.front() == '#') continue;
        if (text == csv_header(TraceKind::didv)) return TraceKind::didv;
        return TraceKind::iv;
    }
    return TraceKind::iv;
}

inline void write_trace_csv(std::ostream& out, const MeasurementTrace& t) {
    validate(t);
    if (!t.meta.device_id.empty()) out << "# device_id: " << t.meta.device_id << '\n';
    if (!t.meta.timestamp.empty()) out << "# timestamp: " << t.meta.timestamp << '\n';
    out << csv_header(t.kind) << '\n';
    for (std::size_t i = 0; i < t.x.size(); ++i) out << format_number(t.x[i]) << ',' << format_number(t.y[i]) << '\n';
}

inline void write_trace_csv(const std::string& path, const MeasurementTrace& t) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    write_trace_csv(out, t);
}

// ---------------------------------------------------------------------------
// Flux maps: long format, bias-major, one row per (bias, frequency) cell.

inline void write_fluxmap_csv(std::ostream& out, const sim::FluxMap& m) {
    out << "# noise: " << format_number(m.noise) << '\n';
    for (const auto& f : m.flagged) out << "# flagged: " << f << '\n';
    out << kFluxMapHeader << '\n';
    for (std::size_t b = 0; b < m.bias_a.size(); ++b) {
        const std::string bias = format_number(m.bias_a[b]);
        for (std::size_t f = 0; f < m.freq_ghz.size(); ++f)
            out << bias << ',' << format_number(m.freq_ghz[f]) << ',' << format_number(m.at(b, f)) << '\n';
    }
}

/// Rebuilds the rectangular grid; branches are not stored in the file.
inline sim::FluxMap read_fluxmap_csv(std::istream& in, const std::string& source = "<stream>") {
    auto table = detail::read_table(in, kFluxMapHeader, source);
    sim::FluxMap m;
    if (auto it = table.meta.find("noise"); it != table.meta.end())
        m.noise = detail::parse_number(it->second, source, 0);
    if (table.rows.empty()) throw ValidationError(source + ": flux map has no rows");

    // Frequency grid from the first bias block.
    const double first_bias = table.rows[0][0];
    for (const auto& r : table.rows) {
        if (r[0] != first_bias) break;
        m.freq_ghz.push_back(r[1]);
    }
    const std::size_t nf = m.freq_ghz.size();
    if (table.rows.size() % nf != 0)
        throw ValidationError(source + ": flux map rows do not form a rectangular grid");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::size_t b = i / nf;
        const std::size_t f = i % nf;
        if (f == 0) {
            if (b > 0 && !(r[0] > m.bias_a.back()))
                throw ValidationError(detail::where(source, table.lines[i]) + "bias is not strictly increasing");
            m.bias_a.push_back(r[0]);
        }
        if (r[0] != m.bias_a[b] || r[1] != m.freq_ghz[f])
            throw ValidationError(detail::where(source, table.lines[i]) + "row breaks the bias-major grid layout");
        m.amplitude.push_back(r[2]);
    }
    sim::validate_grid(m.freq_ghz, "frequency grid", 3);
    sim::validate_grid(m.bias_a, "bias grid", 3);
    return m;
}

inline sim::FluxMap parse_fluxmap_csv(const std::string& path) {
    auto in = detail::open_input(path);
    return read_fluxmap_csv(in, path);
}

}  // namespace metkit::io
