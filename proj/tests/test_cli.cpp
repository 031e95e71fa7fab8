#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "metkit/cli.hpp"
#include "synth.hpp"

using namespace metkit;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("metkit_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Cli, DesignFromCriticalCurrent) {
    const auto r = run({"design", "--area-um2", "1.4", "--stray-ff", "5", "--ic-na", "24"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_NEAR(j["design"]["c_jj_f"].get<double>(), 61.98e-15, 0.01e-15);
    EXPECT_NEAR(j["design"]["e_j_hz"].get<double>(), 11.92e9, 0.01e9);
    EXPECT_NEAR(j["design"]["p_jj"].get<double>(), 0.9254, 1e-4);
    EXPECT_TRUE(r.err.empty());
}

TEST(Cli, DesignNeedsResistanceOrCurrent) {
    const auto r = run({"design", "--area-um2", "1.4"});
    EXPECT_EQ(r.code, 1);
    const auto j = io::Json::parse(r.err);
    EXPECT_EQ(j["error"]["kind"], "validation");
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(run({"design", "--area-um2", "1.4", "--ic-na", "24", "--rn-ohm", "9000"}).code, 1);
}

TEST(Cli, SpectrumAndInvertRoundTrip) {
    const auto s = run({"spectrum", "--ej-ghz", "11.92", "--ec-ghz", "0.289", "--levels", "4"});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto sj = io::Json::parse(s.out);
    EXPECT_EQ(sj["levels_hz"].size(), 4u);
    const double f01 = sj["f01_hz"].get<double>() / 1e9;
    const double alpha = sj["alpha_hz"].get<double>() / 1e6;
    std::ostringstream fa, aa;
    fa.precision(17);
    aa.precision(17);
    fa << f01;
    aa << alpha;
    const auto inv = run({"invert", "--f01-ghz", fa.str(), "--alpha-mhz", aa.str()});
    ASSERT_EQ(inv.code, 0) << inv.err;
    const auto ij = io::Json::parse(inv.out);
    EXPECT_NEAR(ij["e_j_hz"].get<double>(), 11.92e9, 1e3);
    EXPECT_NEAR(ij["e_c_hz"].get<double>(), 0.289e9, 1e3);
}

TEST(Cli, InversionOutsideBoxIsComputationError) {
    const auto r = run({"invert", "--f01-ghz", "5", "--alpha-mhz", "-3000"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(io::Json::parse(r.err)["error"]["kind"], "computation");
}

TEST(Cli, FitCommandsWithPlotCsv) {
    const auto dir = scratch_dir("fit");
    io::write_trace_csv((dir / "t1.csv").string(), synth::decay(TraceKind::t1_decay, 50.0, 1.0, 0.01, 2));
    const auto r = run({"fit", "t1", (dir / "t1.csv").string(), "--csv", (dir / "plot.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(io::Json::parse(r.out)["t1_s"].get<double>(), 50e-6, 2e-6);
    const auto plot = slurp(dir / "plot.csv");
    EXPECT_EQ(plot.rfind("delay_s,p1,model,residual\n", 0), 0u);

    io::write_trace_csv((dir / "t2.csv").string(), synth::decay(TraceKind::t2_echo, 20.0, 1.37, 0.01, 2));
    const auto t2 = run({"fit", "t2", (dir / "t2.csv").string()});
    ASSERT_EQ(t2.code, 0) << t2.err;
    EXPECT_NEAR(io::Json::parse(t2.out)["stretch"].get<double>(), 1.37, 0.07);
    const auto fixed = run({"fit", "t2", (dir / "t2.csv").string(), "--stretch", "1"});
    ASSERT_EQ(fixed.code, 0) << fixed.err;
    EXPECT_EQ(io::Json::parse(fixed.out)["stretch"].get<double>(), 1.0);

    io::write_trace_csv((dir / "didv.csv").string(), synth::sis(TraceKind::didv, 191.0, 2.0, 0.02, 9000.0, 0.005, 1));
    const auto iv = run({"fit", "iv", (dir / "didv.csv").string()});
    ASSERT_EQ(iv.code, 0) << iv.err;
    EXPECT_NEAR(io::Json::parse(iv.out)["gap_ev"].get<double>(), 191e-6, 1e-6);

    const auto missing = run({"fit", "t1", (dir / "nope.csv").string()});
    EXPECT_EQ(missing.code, 1);
    fs::remove_all(dir);
}

TEST(Cli, SimulateThenDetect) {
    const auto dir = scratch_dir("sim");
    const io::Json cfg{{"bias_a", {{"start", 0.0}, {"stop", 1.2e-4}, {"count", 121}}},
                       {"flux_transfer", {{"k_phi0_per_a", 1000.0}}},
                       {"squid", {{"e_j_sum_hz", 15e9}, {"asymmetry", 0.3}}},
                       {"e_c_hz", 0.25e9},
                       {"freq_hz", {{"start", 4.8e9}, {"stop", 5.4e9}, {"count", 1201}}},
                       {"linewidth_hz", 3e6},
                       {"noise", 0.02},
                       {"seed", 1},
                       {"defects", {{{"frequency_hz", 5.1e9}, {"coupling_hz", 10e6}, {"label", "t"}}}}};
    {
        std::ofstream f(dir / "cfg.json");
        f << cfg.dump();
    }
    const auto map = (dir / "map.csv").string();
    const auto sim = run({"simulate", "fluxmap", "--config", (dir / "cfg.json").string(), "--out", map, "--threads", "2"});
    ASSERT_EQ(sim.code, 0) << sim.err;
    const auto det = run({"crossings", map, "--area-um2", "2.9", "--csv", (dir / "x.csv").string()});
    ASSERT_EQ(det.code, 0) << det.err;
    const auto j = io::Json::parse(det.out);
    ASSERT_EQ(j["count"], 1);
    EXPECT_NEAR(j["crossings"][0]["splitting_hz"].get<double>(), 20e6, 0.5e6);
    EXPECT_FALSE(j["density_per_um2_per_ghz"].is_null());

    // Same seed, same bytes.
    const auto again = (dir / "map2.csv").string();
    ASSERT_EQ(run({"simulate", "fluxmap", "--config", (dir / "cfg.json").string(), "--out", again}).code, 0);
    EXPECT_EQ(slurp(map), slurp(again));
    fs::remove_all(dir);
}

TEST(Cli, BudgetReport) {
    const auto r = run({"budget", METKIT_SAMPLES_DIR "/loss_budget.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_EQ(j["junction_bound"]["text"], "tan δ_JJ ≲ 5×10⁻⁷");
    EXPECT_NEAR(j["projection"]["t1_limit_by_participation_s"].get<double>(), 4.18e-3, 0.01e-3);
    EXPECT_EQ(j["budget"]["channels"].size(), 3u);
}

TEST(Cli, ReportJsonAndCsv) {
    const std::string reg = METKIT_SAMPLES_DIR "/table2_registry.json";
    const auto a = run({"report", "--registry", reg});
    const auto b = run({"report", "--registry", reg, "--threads", "3"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto j = io::Json::parse(a.out);
    EXPECT_EQ(j["rows"].size(), 10u);
    EXPECT_EQ(j["rows"][0]["alpha_over_2pi_hz"].get<double>(), 414e6);
    const auto csv = run({"report", "--registry", reg, "--format", "csv"});
    ASSERT_EQ(csv.code, 0);
    EXPECT_EQ(csv.out.rfind(io::kReportCsvHeader, 0), 0u);
    EXPECT_EQ(run({"report", "--registry", reg, "--format", "xml"}).code, 1);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"spectrum", "--ej-ghz", "abc", "--ec-ghz", "1"}).code, 1);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("spectrum"), std::string::npos);
}

TEST(Cli, BinaryKeepsStdoutClean) {
    const auto dir = scratch_dir("bin");
    const std::string out = (dir / "out.txt").string();
    const std::string err = (dir / "err.txt").string();
    const std::string cmd = std::string(METKIT_CLI_PATH) + " spectrum --ej-ghz 10 --ec-ghz 1 > " + out + " 2> " + err;
    int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
    EXPECT_TRUE(io::Json::accept(slurp(out)));
    EXPECT_TRUE(slurp(err).empty());

    const std::string bad = std::string(METKIT_CLI_PATH) + " spectrum --ej-ghz 10 --ec-ghz -1 > " + out + " 2> " + err;
    status = std::system(bad.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 1);
    EXPECT_TRUE(slurp(out).empty());
    EXPECT_EQ(io::Json::parse(slurp(err))["error"]["kind"], "validation");
    fs::remove_all(dir);
}
