// Acceptance checks 1-11. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. `acceptance N` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "metkit/cli.hpp"
#include "metkit/decay_fit.hpp"
#include "metkit/dynes_fit.hpp"
#include "metkit/junction_design.hpp"
#include "metkit/loss_budget.hpp"
#include "metkit/qubit_core.hpp"
#include "metkit/report.hpp"
#include "metkit/spectro_sim.hpp"
#include "oracle.hpp"
#include "synth.hpp"

using namespace metkit;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            out_.pass = false;
            if (!failures_.empty()) failures_ += "; ";
            failures_ += what;
        }
    }
    void note(const std::string& s) {
        if (!notes_.empty()) notes_ += ", ";
        notes_ += s;
    }
    Outcome finish() {
        out_.detail = out_.pass ? notes_ : failures_ + (notes_.empty() ? "" : " [" + notes_ + "]");
        return out_;
    }

private:
    Outcome out_;
    std::string failures_, notes_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

// Round to `decimals` places, the way a printed table would.
double rounded(double x, int decimals) {
    const double s = std::pow(10.0, decimals);
    return std::round(x * s) / s;
}

Outcome c1_design_capacitance() {
    Check c;
    design::JunctionSpec spec;
    spec.area_um2 = 1.4;
    spec.oxide_thickness_nm = 2.0;
    spec.eps_r = 10.0;
    spec.rn_room_ohm = 9000.0;
    const auto d = design::design_forward(spec, 5.0);
    const double ref = oracle::plate_ff(1.4, 2.0, 10.0);
    c.expect(within(d.c_jj_ff, 62.0, 0.5), "C_JJ " + fmt("%.3f", d.c_jj_ff) + " fF");
    c.expect(within(d.c_jj_ff, ref, 1e-9), "C_JJ differs from oracle");
    c.expect(within(d.p_jj, 0.925, 0.005), "p_JJ " + fmt("%.4f", d.p_jj));
    c.expect(within(d.p_jj, ref / (ref + 5.0), 1e-12), "p_JJ differs from oracle");
    c.note("C_JJ = " + fmt("%.2f", d.c_jj_ff) + " fF");
    c.note("p_JJ = " + fmt("%.4f", d.p_jj));
    return c.finish();
}

Outcome c2_targeting() {
    Check c;
    const double ej = design::josephson_energy(24.0);
    const double ec = design::charging_energy(67.0);
    const auto s = qubit::spectrum({ej, ec, 0.0});
    const auto ref = oracle::transitions(oracle::ej_ghz(24.0), oracle::ec_ghz(67.0));
    c.expect(within(ej, 11.92, 0.05), "E_J " + fmt("%.4f", ej));
    c.expect(within(ec * 1e3, 289.0, 2.0), "E_C " + fmt("%.2f", ec * 1e3) + " MHz");
    c.expect(within(ej / ec, 41.0, 1.0), "E_J/E_C " + fmt("%.2f", ej / ec));
    c.expect(within(s.f01, 5.0, 0.1), "f01 " + fmt("%.4f", s.f01));
    c.expect(within(s.f01, ref.f01, 1e-9), "f01 differs from oracle");
    c.note("E_J = " + fmt("%.3f", ej) + " GHz");
    c.note("E_C = " + fmt("%.1f", ec * 1e3) + " MHz");
    c.note("ratio " + fmt("%.1f", ej / ec));
    c.note("f01 = " + fmt("%.3f", s.f01) + " GHz");
    return c.finish();
}

struct TableRow {
    const char* id;
    double f01, alpha_mhz, ratio, mean_q;
    int q_decimals;
};

const std::vector<TableRow>& table() {
    static const std::vector<TableRow> rows{
        {"J4", 3.808, 414, 21, 2.2, 1},  {"K7", 3.747, 343, 27, 2.1, 1},  {"J7", 3.748, 362, 25, 2.1, 1},
        {"K5", 3.771, 339, 27, 1.2, 1},  {"J6", 3.758, 368, 24, 0.90, 2}, {"A6", 4.978, 404, 32, 1.1, 1},
        {"B9", 4.521, 439, 25, 0.48, 2}, {"A9", 4.610, 426, 26, 0.47, 2}, {"A5", 5.032, 417, 31, 0.46, 2},
        {"B7", 4.503, 376, 30, 0.33, 2},
    };
    return rows;
}

Outcome c3_table_q() {
    Check c;
    const auto reg = io::load_registry(METKIT_SAMPLES_DIR "/table2_registry.json");
    const auto rep = io::generate_report(reg);
    c.expect(rep.rows.size() == table().size(), "expected 10 rows");
    for (std::size_t i = 0; i < rep.rows.size() && i < table().size(); ++i) {
        const auto& row = rep.rows[i];
        const auto& ref = table()[i];
        c.expect(row.id == ref.id, "row order");
        if (!row.mean_q) {
            c.expect(false, row.id + ": no mean Q");
            continue;
        }
        // Independent: 2 pi f T1 from the table's own columns.
        const double t1 = row.t1_us->mean;
        const double q_m = 2.0 * std::numbers::pi * ref.f01 * 1e9 * t1 * 1e-6 / 1e6;
        c.expect(within(*row.mean_q / 1e6, q_m, 1e-9), row.id + ": Q differs from oracle");
        const double shown = rounded(*row.mean_q / 1e6, ref.q_decimals);
        c.expect(within(shown, ref.mean_q, 0.05 + 1e-12), row.id + ": Q " + fmt("%.3f", *row.mean_q / 1e6) + " M");
    }
    c.note("J4 Q = " + fmt("%.3f", rep.rows.empty() ? 0.0 : *rep.rows[0].mean_q / 1e6) + " M");
    return c.finish();
}

Outcome c4_loss_bound() {
    Check c;
    const double b = loss::junction_loss_bound(2.2e6, 0.93);
    const std::string text = loss::format_upper_bound(b);
    c.expect(b <= 4.9e-7, "bound " + fmt("%.4g", b));
    c.expect(within(b, 1.0 / (2.2e6 * 0.93), 1e-20), "bound differs from 1/(Q p)");
    c.expect(text == "≲ 5×10⁻⁷", "printed as '" + text + "'");
    c.note("tan δ_JJ = " + fmt("%.4g", b) + " printed " + text);
    return c.finish();
}

Outcome c5_projection() {
    Check c;
    const auto p = loss::project(89.9, 0.93, 0.02, 1.4, 0.03);
    c.expect(within(p.participation_ratio, 46.5, 1e-9), "ratio " + fmt("%.3f", p.participation_ratio));
    c.expect(within(p.t1_ms_by_participation, 4.1, 0.1), "T1 " + fmt("%.4f", p.t1_ms_by_participation) + " ms");
    c.expect(within(p.t1_ms_by_participation, 89.9e-3 * 0.93 / 0.02, 1e-12), "T1 differs from oracle");
    c.note("T1_conv = " + fmt("%.3f", p.t1_ms_by_participation) + " ms");
    c.note("area route " + fmt("%.2f", p.t1_ms_by_area) + " ms");
    return c.finish();
}

Outcome c6_tls_density() {
    Check c;
    const double rho = sim::tls_density(17, 6 * 2.9, 1.0);
    c.expect(within(rho, 0.98, 0.005), "density " + fmt("%.4f", rho));
    c.expect(within(rounded(rho, 1), 1.0, 1e-12), "does not round to 1.0");
    c.expect(within(rho, 17.0 / 17.4, 1e-12), "density differs from oracle");
    c.note("ρ = " + fmt("%.4f", rho) + " per um^2 per GHz");
    return c.finish();
}

Outcome c7_substrate_comparison() {
    Check c;
    const double r = loss::contribution_reduction(3.5e-5, 5.0e-5);
    c.expect(within(r, 0.30, 1e-12), "reduction " + fmt("%.4f", r));
    // Same comparison through the CLI budget report.
    std::ostringstream out, err;
    const std::vector<std::string> args{"budget", METKIT_SAMPLES_DIR "/loss_budget.json"};
    const int code = cli::run_cli(args, out, err);
    c.expect(code == 0, "budget command exit " + std::to_string(code) + " " + err.str());
    if (code == 0) {
        const auto j = io::Json::parse(out.str());
        const std::string text = j.at("comparisons").at(0).at("text").get<std::string>();
        c.expect(text.find("30%") != std::string::npos, "report text '" + text + "'");
        c.note(text);
    }
    return c.finish();
}

Outcome c8_spectrum_properties() {
    Check c;
    // Offset-charge periodicity and parity.
    double worst_sym = 0.0;
    for (double ratio : {1.0, 5.0, 20.0, 60.0}) {
        for (double ng : {0.0, 0.13, 0.37, 0.5}) {
            const auto a = qubit::spectrum({ratio * 0.3, 0.3, ng}, 4).levels;
            const auto b = qubit::spectrum({ratio * 0.3, 0.3, ng + 1.0}, 4).levels;
            const auto m = qubit::spectrum({ratio * 0.3, 0.3, -ng}, 4).levels;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double scale = std::max(1.0, std::abs(a[i]));
                worst_sym = std::max({worst_sym, std::abs(a[i] - b[i]) / scale, std::abs(a[i] - m[i]) / scale});
            }
        }
    }
    c.expect(worst_sym <= 1e-13, "n_g symmetry error " + fmt("%.3g", worst_sym));

    // Asymptotic f01 = sqrt(8 E_J E_C) - E_C.
    double worst_asym = 0.0;
    for (double ratio : {50.0, 80.0, 120.0, 200.0, 400.0}) {
        const double ec = 0.25;
        const double f = qubit::spectrum({ratio * ec, ec, 0.0}).f01;
        worst_asym = std::max(worst_asym, std::abs(f / (std::sqrt(8.0 * ratio) * ec - ec) - 1.0));
    }
    c.expect(worst_asym <= 0.01, "asymptotic error " + fmt("%.4f", worst_asym));

    // Dense-diagonalization oracle, 20 ratios, 1 Hz.
    double worst_hz = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double ratio = std::pow(10.0, -0.5 + 2.8 * i / 19.0);  // 0.32 .. 200
        const double ec = 0.25;
        for (double ng : {0.0, 0.25}) {
            const auto s = qubit::spectrum({ratio * ec, ec, ng});
            const auto ref = oracle::transitions(ratio * ec, ec, ng);
            worst_hz = std::max({worst_hz, std::abs(s.f01 - ref.f01) * 1e9, std::abs(s.alpha - ref.alpha) * 1e9});
        }
    }
    c.expect(worst_hz <= 1.0, "oracle mismatch " + fmt("%.3g", worst_hz) + " Hz");

    // invert(spectrum(E_J, E_C)) == (E_J, E_C) to 1 kHz.
    double worst_inv = 0.0;
    for (double ec : {0.15, 0.25, 0.4}) {
        for (double ratio : {12.0, 25.0, 41.0, 80.0, 300.0}) {
            const auto s = qubit::spectrum({ratio * ec, ec, 0.0});
            const auto p = qubit::invert_spectroscopy(s.f01, s.alpha);
            worst_inv = std::max({worst_inv, std::abs(p.e_j - ratio * ec) * 1e9, std::abs(p.e_c - ec) * 1e9});
        }
    }
    c.expect(worst_inv <= 1e3, "inversion error " + fmt("%.3g", worst_inv) + " Hz");
    c.note("symmetry " + fmt("%.1e", worst_sym));
    c.note("asymptotic " + fmt("%.2e", worst_asym));
    c.note("oracle " + fmt("%.1e", worst_hz) + " Hz");
    c.note("inversion " + fmt("%.1e", worst_inv) + " Hz");
    return c.finish();
}

Outcome c9_table_ratio() {
    Check c;
    double lo = 1e9, hi = -1e9;
    for (const auto& r : table()) {
        const auto p = qubit::invert_spectroscopy(r.f01, -r.alpha_mhz * 1e-3);
        const double ratio = p.e_j / p.e_c;
        const double rel = ratio / r.ratio - 1.0;
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
        c.expect(std::abs(rel) <= 0.20, std::string(r.id) + ": " + fmt("%.2f", ratio) + " vs " + fmt("%.0f", r.ratio));
        // Oracle: the recovered pair reproduces (f01, alpha) under dense diagonalization.
        const auto ref = oracle::transitions(p.e_j, p.e_c);
        c.expect(within(ref.f01, r.f01, 1e-6) && within(ref.alpha, -r.alpha_mhz * 1e-3, 1e-6),
                 std::string(r.id) + ": inversion does not reproduce the input");
    }
    c.note("offsets " + fmt("%+.1f%%", lo * 100) + " .. " + fmt("%+.1f%%", hi * 100) + " vs published");
    return c.finish();
}

Outcome c10_fit_round_trips() {
    Check c;
    for (double gap : {200.0, 191.0}) {
        const auto t = synth::sis(TraceKind::didv, gap, 2.0, 0.02, 9000.0, 0.01, 1);
        fit::DynesOptions opt;
        opt.temperature_k = 0.02;
        const auto f = fit::fit_dynes(t, opt);
        c.expect(f.fit.converged, "Dynes fit did not converge");
        c.expect(std::abs(f.gap_uev / gap - 1.0) <= 0.01, "Δ " + fmt("%.3f", f.gap_uev) + " for " + fmt("%.0f", gap));
        c.note("Δ " + fmt("%.0f", gap) + " -> " + fmt("%.3f", f.gap_uev));
    }
    const auto t1 = fit::fit_t1(synth::decay(TraceKind::t1_decay, 89.9, 1.0, 0.02, 0));
    c.expect(std::abs(t1.tau_us / 89.9 - 1.0) <= 0.03, "T1 " + fmt("%.3f", t1.tau_us));
    c.note("T1 -> " + fmt("%.2f", t1.tau_us) + " us");
    const auto t2 = fit::fit_t2_stretched(synth::decay(TraceKind::t2_echo, 21.1, 1.37, 0.02, 0));
    c.expect(std::abs(t2.stretch / 1.37 - 1.0) <= 0.05, "n " + fmt("%.4f", t2.stretch));
    c.note("n -> " + fmt("%.4f", t2.stretch));
    return c.finish();
}

Outcome c11_fluxmap() {
    Check c;
    auto cfg = synth::fluxmap_config(3);
    const double step = sim::frequency_step(cfg.freq_ghz);
    const auto map = sim::simulate_fluxmap(cfg, synth::two_defects());
    const auto r = sim::detect_crossings(map);
    c.expect(r.crossings.size() == 2, std::to_string(r.crossings.size()) + " crossings");
    if (r.crossings.size() == 2) {
        std::vector<double> split{r.crossings[0].splitting_ghz, r.crossings[1].splitting_ghz};
        std::sort(split.begin(), split.end());
        c.expect(within(split[0], 0.020, step), "splitting " + fmt("%.4f", split[0] * 1e3) + " MHz");
        c.expect(within(split[1], 0.030, step), "splitting " + fmt("%.4f", split[1] * 1e3) + " MHz");
        c.note("splittings " + fmt("%.2f", split[0] * 1e3) + ", " + fmt("%.2f", split[1] * 1e3) + " MHz");
    }
    // Bare maps: the noiseless branches are shared, the noise seed varies.
    const auto bare = sim::simulate_branches(cfg, {});
    std::size_t false_positives = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.seed = seed;
        false_positives += sim::detect_crossings(sim::render_fluxmap(cfg, bare)).crossings.size();
    }
    c.expect(false_positives == 0, std::to_string(false_positives) + " false positives over 100 seeds");
    c.note(std::to_string(false_positives) + " false positives / 100 bare maps");
    return c.finish();
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"design capacitance and participation", c1_design_capacitance},
        {"junction targeting", c2_targeting},
        {"characterization table Q column", c3_table_q},
        {"junction loss-tangent bound", c4_loss_bound},
        {"scaling projection", c5_projection},
        {"TLS density", c6_tls_density},
        {"substrate-vacuum comparison", c7_substrate_comparison},
        {"spectrum properties", c8_spectrum_properties},
        {"characterization table E_J/E_C", c9_table_ratio},
        {"fit round trips", c10_fit_round_trips},
        {"flux-map round trip", c11_fluxmap},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (only != 0 && only != n) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs >= 10.0) {
            o.pass = false;
            o.detail += " (over the 10 s budget)";
        }
        std::printf("%s criterion %d: %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
