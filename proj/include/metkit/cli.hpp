#pragma once

// Command-line surface. run_cli takes its streams explicitly so tests can
// drive it in-process. stdout carries data, stderr carries diagnostics and the
// structured error JSON. Exit codes: 0 ok, 1 usage/validation, 2 computation.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "metkit/csv_io.hpp"
#include "metkit/decay_fit.hpp"
#include "metkit/dynes_fit.hpp"
#include "metkit/error.hpp"
#include "metkit/json_io.hpp"
#include "metkit/junction_design.hpp"
#include "metkit/loss_budget.hpp"
#include "metkit/qubit_core.hpp"
#include "metkit/report.hpp"
#include "metkit/spectro_sim.hpp"

namespace metkit::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kComputation = 2 };

namespace detail {

inline std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto log = std::make_shared<spdlog::logger>("metkit", sink);
    log->set_pattern("[%l] %v");
    const char* env = std::getenv("METKIT_LOG");
    log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return log;
}

inline void write_error(std::ostream& err, const char* kind, const std::string& message) {
    err << io::Json{{"error", io::Json{{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

// Plot-ready side output requested with --csv.
class PlotFile {
public:
    explicit PlotFile(const std::string& path) {
        if (path.empty()) return;
        out_.open(path);
        if (!out_) throw ValidationError("cannot write '" + path + "'");
    }
    [[nodiscard]] bool enabled() const { return out_.is_open(); }
    std::ofstream& stream() { return out_; }

private:
    std::ofstream out_;
};

inline std::string num(double v) { return io::format_number(v); }

struct FitCommand {
    std::string trace;
    std::string csv;
    std::optional<double> stretch;
    double temperature_k = 0.02;
};

inline void write_fit_plot(PlotFile& plot, const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& model, const char* x_name, const char* y_name) {
    if (!plot.enabled()) return;
    auto& o = plot.stream();
    o << x_name << ',' << y_name << ",model,residual\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        o << num(x[i]) << ',' << num(y[i]) << ',' << num(model[i]) << ',' << num(y[i] - model[i]) << '\n';
}

inline io::Json run_budget(const io::Json& j, PlotFile& plot) {
    const std::string ctx = "budget";
    const double f01_ghz = io::number(j, "f01_hz", ctx) / io::kGhzToHz;
    std::vector<loss::LossChannel> channels;
    const auto& list = io::field(j, "channels", ctx);
    if (!list.is_array()) throw ValidationError("budget.channels must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string c = ctx + ".channels[" + std::to_string(i) + "]";
        const auto& ch = list[i];
        const std::string name = io::text(ch, "name", c);
        const double tan = io::number(ch, "tan_delta", c);
        if (ch.contains("participation")) {
            channels.push_back({name, io::number(ch, "participation", c), tan});
        } else {
            // Per-length surface participation times the layer thickness.
            const double per_nm = io::number(ch, "participation_per_m", c) * io::kNanometre;
            const double thickness_nm = io::number(ch, "layer_thickness_m", c) / io::kNanometre;
            channels.push_back(loss::surface_channel(name, per_nm, thickness_nm, tan));
        }
    }
    const auto budget = loss::make_budget(std::move(channels), f01_ghz);
    io::Json out{{"budget", io::to_json(budget)}};

    if (j.contains("bound")) {
        const auto& b = j.at("bound");
        const double q = b.contains("q") ? io::number(b, "q", "budget.bound") : budget.q;
        const double p = io::number(b, "p_jj", "budget.bound");
        const double bound = loss::junction_loss_bound(q, p);
        out["junction_bound"] = io::Json{{"q", q}, {"p_jj", p}, {"tan_delta_bound", bound},
                                         {"text", "tan δ_JJ " + loss::format_upper_bound(bound)}};
    }
    if (j.contains("projection")) {
        const auto& p = j.at("projection");
        const std::string c = ctx + ".projection";
        const auto proj = loss::project(io::number(p, "t1_s", c) / io::kMicrosecond, io::number(p, "p_met", c),
                                        io::number(p, "p_conv", c), io::number(p, "area_met_m2", c) / io::kSquareMicron,
                                        io::number(p, "area_conv_m2", c) / io::kSquareMicron);
        out["projection"] = io::to_json(proj);
    }
    if (j.contains("comparisons")) {
        io::Json cmp = io::Json::array();
        for (const auto& c : j.at("comparisons")) {
            const double p = io::number(c, "participation_per_m", "budget.comparisons");
            const double ref = io::number(c, "reference_per_m", "budget.comparisons");
            const double red = loss::contribution_reduction(p, ref);
            char pct[32];
            std::snprintf(pct, sizeof pct, "%.0f%%", red * 100.0);
            cmp.push_back(io::Json{{"name", c.contains("name") ? io::text(c, "name", "budget.comparisons") : ""},
                                   {"participation_per_m", p},
                                   {"reference_per_m", ref},
                                   {"reduction", red},
                                   {"text", std::string("reduced by ") + pct + " relative to the reference"}});
        }
        out["comparisons"] = cmp;
    }
    if (plot.enabled()) {
        auto& o = plot.stream();
        o << "channel,participation,tan_delta,contribution\n";
        for (const auto& c : budget.channels)
            o << c.name << ',' << num(c.participation) << ',' << num(c.tan_delta) << ',' << num(c.participation * c.tan_delta)
              << '\n';
    }
    return out;
}

}  // namespace detail

/// Runs one CLI invocation; `args` excludes the program name.
inline int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    using metkit::cli::detail::num;
    auto log = detail::make_logger(err);

    CLI::App app{"metkit: merged-element transmon design and characterization toolkit", "metkit"};
    app.require_subcommand(1);
    std::string plot_path;
    unsigned threads = 1;
    auto add_csv = [&](CLI::App* sub) {
        sub->add_option("--csv", plot_path, "Also write plot-ready CSV to this path");
    };

    // design
    design::JunctionSpec spec;
    double stray_ff = 0.0;
    std::optional<double> ic_na;
    auto* design_cmd = app.add_subcommand("design", "Junction geometry -> device parameters");
    design_cmd->add_option("--area-um2", spec.area_um2, "Junction area (um^2)")->required();
    design_cmd->add_option("--oxide-nm", spec.oxide_thickness_nm, "Oxide thickness (nm)")->capture_default_str();
    design_cmd->add_option("--epsr", spec.eps_r, "Relative permittivity")->capture_default_str();
    design_cmd->add_option("--stray-ff", stray_ff, "Stray capacitance (fF)")->capture_default_str();
    auto* rn_opt = design_cmd->add_option("--rn-ohm", spec.rn_room_ohm, "Room-temperature normal resistance (ohm)");
    design_cmd->add_option("--cold-factor", spec.cold_factor, "R_cold / R_room")->capture_default_str();
    auto* ic_opt = design_cmd->add_option("--ic-na", ic_na, "Critical current override (nA)");
    design_cmd->add_option("--gap-uev", spec.gap_uev, "Superconducting gap (ueV)")->capture_default_str();
    rn_opt->excludes(ic_opt);
    add_csv(design_cmd);

    // spectrum
    qubit::TransmonParams tp;
    int levels = 3;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "E_J, E_C -> transmon spectrum");
    spectrum_cmd->add_option("--ej-ghz", tp.e_j, "E_J / h (GHz)")->required();
    spectrum_cmd->add_option("--ec-ghz", tp.e_c, "E_C / h (GHz)")->required();
    spectrum_cmd->add_option("--ng", tp.n_g, "Offset charge (2e)")->capture_default_str();
    spectrum_cmd->add_option("--levels", levels, "Number of levels")->capture_default_str();
    add_csv(spectrum_cmd);

    // invert
    double f01_ghz = 0.0, alpha_mhz = 0.0;
    auto* invert_cmd = app.add_subcommand("invert", "(f01, alpha) -> E_J, E_C");
    invert_cmd->add_option("--f01-ghz", f01_ghz, "Qubit frequency (GHz)")->required();
    invert_cmd->add_option("--alpha-mhz", alpha_mhz, "Anharmonicity f12 - f01 (MHz, negative)")->required();
    add_csv(invert_cmd);

    // fit
    detail::FitCommand fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a measurement trace");
    fit_cmd->require_subcommand(1);
    auto* fit_t1 = fit_cmd->add_subcommand("t1", "Exponential T1 decay");
    auto* fit_t2 = fit_cmd->add_subcommand("t2", "Stretched-exponential echo decay");
    auto* fit_iv = fit_cmd->add_subcommand("iv", "Dynes SIS fit to I-V or dI/dV");
    for (auto* sub : {fit_t1, fit_t2, fit_iv}) {
        sub->add_option("trace", fit_args.trace, "Trace CSV")->required()->check(CLI::ExistingFile);
        add_csv(sub);
    }
    fit_t2->add_option("--stretch", fit_args.stretch, "Hold the exponent n fixed");
    fit_iv->add_option("--temperature-k", fit_args.temperature_k, "Electron temperature (K)")->capture_default_str();

    // simulate fluxmap
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string map_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "Synthetic measurements");
    simulate_cmd->require_subcommand(1);
    auto* fluxmap_cmd = simulate_cmd->add_subcommand("fluxmap", "Flux-map spectroscopy with TLS defects");
    fluxmap_cmd->add_option("--config", config_path, "Map config JSON")->required()->check(CLI::ExistingFile);
    fluxmap_cmd->add_option("--seed", seed, "Noise seed (overrides the config)");
    fluxmap_cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();
    fluxmap_cmd->add_option("--out", map_out, "Write the map CSV here instead of stdout");

    // crossings
    std::string map_path;
    std::optional<double> threshold_mhz, area_um2, noise;
    auto* crossings_cmd = app.add_subcommand("crossings", "Detect avoided crossings in a map CSV");
    crossings_cmd->add_option("map", map_path, "Flux-map CSV")->required()->check(CLI::ExistingFile);
    crossings_cmd->add_option("--threshold-mhz", threshold_mhz, "Minimum splitting (MHz); default 2 grid steps");
    crossings_cmd->add_option("--area-um2", area_um2, "Junction area for the density estimate (um^2)");
    crossings_cmd->add_option("--noise", noise, "Amplitude noise sigma (overrides the file header)");
    add_csv(crossings_cmd);

    // budget
    std::string budget_path;
    auto* budget_cmd = app.add_subcommand("budget", "Loss budget, junction bound and scaling projection");
    budget_cmd->add_option("budget", budget_path, "Budget JSON")->required()->check(CLI::ExistingFile);
    add_csv(budget_cmd);

    // report
    std::string registry_path;
    std::string format = "json";
    auto* report_cmd = app.add_subcommand("report", "Registry -> characterization table");
    report_cmd->add_option("--registry", registry_path, "Device registry JSON")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    report_cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();
    add_csv(report_cmd);

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kValidation;
    }

    try {
        detail::PlotFile plot(plot_path);
        if (*design_cmd) {
            if (ic_na) {
                if (!(*ic_na > 0.0)) throw ValidationError("--ic-na must be positive");
                spec.rn_room_ohm = design::resistance_for_current(spec.gap_uev, *ic_na) / spec.cold_factor;
            } else if (rn_opt->count() == 0) {
                throw ValidationError("design needs either --rn-ohm or --ic-na");
            }
            const auto d = design::design_forward(spec, stray_ff, ic_na);
            out << io::Json{{"spec", io::to_json(spec)}, {"design", io::to_json(d)}}.dump(2) << '\n';
            if (plot.enabled()) {
                auto& o = plot.stream();
                o << "quantity,value\n";
                const auto j = io::to_json(d);
                for (const auto& [k, v] : j.items()) o << k << ',' << num(v.get<double>()) << '\n';
            }
        } else if (*spectrum_cmd) {
            const auto r = qubit::spectrum(tp, levels);
            out << io::to_json(r).dump(2) << '\n';
            if (plot.enabled()) {
                plot.stream() << "level,energy_hz\n";
                for (std::size_t i = 0; i < r.levels.size(); ++i)
                    plot.stream() << i << ',' << num(r.levels[i] * io::kGhzToHz) << '\n';
            }
        } else if (*invert_cmd) {
            const auto r = qubit::invert_spectroscopy_detailed(f01_ghz, alpha_mhz * 1e-3);
            const auto back = qubit::spectrum(r.params);
            auto j = io::to_json(r);
            j["f01_hz"] = back.f01 * io::kGhzToHz;
            j["alpha_hz"] = back.alpha * io::kGhzToHz;
            out << j.dump(2) << '\n';
            if (plot.enabled()) {
                plot.stream() << "quantity,value\n";
                for (const auto& [k, v] : j.items())
                    if (v.is_number()) plot.stream() << k << ',' << num(v.get<double>()) << '\n';
            }
        } else if (*fit_cmd) {
            if (*fit_t1 || *fit_t2) {
                const bool stretched = static_cast<bool>(*fit_t2);
                const auto trace =
                    io::parse_trace_csv(fit_args.trace, stretched ? TraceKind::t2_echo : TraceKind::t1_decay);
                const auto f = stretched ? fit::fit_t2_stretched(trace, fit_args.stretch) : fit::fit_t1(trace);
                log->info("{} fit converged in {} iterations", stretched ? "T2" : "T1", f.fit.iterations);
                out << io::to_json(f, stretched).dump(2) << '\n';
                std::vector<double> model(trace.x.size());
                for (std::size_t i = 0; i < model.size(); ++i) {
                    const double t = trace.x[i] / (f.tau_us * units::kMicro);
                    model[i] = f.offset + f.amplitude * std::exp(-std::pow(t, f.stretch));
                }
                detail::write_fit_plot(plot, trace.x, trace.y, model, "delay_s", "p1");
            } else {
                const auto kind = io::sniff_sis_kind(fit_args.trace);
                const auto trace = io::parse_trace_csv(fit_args.trace, kind);
                fit::DynesOptions opt;
                opt.temperature_k = fit_args.temperature_k;
                const auto f = fit::fit_dynes(trace, opt);
                log->info("Dynes fit ({}) converged in {} iterations", to_string(kind), f.fit.iterations);
                out << io::to_json(f).dump(2) << '\n';
                const auto model = fit::sis_curve(kind, trace.x, {f.gap_uev, f.gap_uev, f.gamma_uev, opt.temperature_k, f.rn_ohm});
                detail::write_fit_plot(plot, trace.x, trace.y, model, "voltage_V",
                                       kind == TraceKind::didv ? "conductance_S" : "current_A");
            }
        } else if (*simulate_cmd) {
            auto input = io::fluxmap_input_from_json(io::parse_json(io::read_file(config_path), config_path));
            if (seed) input.config.seed = *seed;
            input.config.threads = threads;
            const auto map = sim::simulate_fluxmap(input.config, input.defects);
            for (const auto& f : map.flagged) log->warn("defect {} lies outside the frequency grid", f);
            if (map_out.empty()) {
                io::write_fluxmap_csv(out, map);
            } else {
                std::ofstream file(map_out);
                if (!file) throw ValidationError("cannot write '" + map_out + "'");
                io::write_fluxmap_csv(file, map);
            }
        } else if (*crossings_cmd) {
            auto map = io::parse_fluxmap_csv(map_path);
            if (noise) map.noise = *noise;
            sim::DetectorOptions opt;
            if (threshold_mhz) opt.threshold_ghz = *threshold_mhz * 1e-3;
            opt.area_um2 = area_um2;
            const auto r = sim::detect_crossings(map, opt);
            out << io::to_json(r).dump(2) << '\n';
            if (plot.enabled()) {
                plot.stream() << "bias_a,center_hz,splitting_hz\n";
                for (const auto& c : r.crossings)
                    plot.stream() << num(c.bias_a) << ',' << num(c.center_ghz * io::kGhzToHz) << ','
                                  << num(c.splitting_ghz * io::kGhzToHz) << '\n';
            }
        } else if (*budget_cmd) {
            const auto j = io::parse_json(io::read_file(budget_path), budget_path);
            out << detail::run_budget(j, plot).dump(2) << '\n';
        } else if (*report_cmd) {
            const auto reg = io::load_registry(registry_path);
            io::ReportOptions opt;
            opt.threads = threads;
            const auto rep = io::generate_report(reg, opt);
            for (const auto& row : rep.rows)
                for (const auto& flag : row.flags) log->warn("{}: {}", row.id, flag);
            if (format == "csv")
                io::write_report_csv(out, rep);
            else
                out << io::to_json(rep).dump(2) << '\n';
            if (plot.enabled()) io::write_report_csv(plot.stream(), rep);
        }
    } catch (const ValidationError& e) {
        detail::write_error(err, "validation", e.what());
        return kValidation;
    } catch (const ComputationError& e) {
        detail::write_error(err, "computation", e.what());
        return kComputation;
    } catch (const std::exception& e) {
        detail::write_error(err, "computation", e.what());
        return kComputation;
    }
    return kOk;
}

}  // namespace metkit::cli
