#include <gtest/gtest.h>

#include <cmath>

#include "metkit/dynes_fit.hpp"
#include "metkit/sis.hpp"
#include "oracle.hpp"
#include "synth.hpp"

using namespace metkit;
using namespace metkit::fit;

TEST(Sis, DosLimits) {
    EXPECT_EQ(dynes_dos(100.0, 200.0, 0.0), 0.0);
    EXPECT_NEAR(dynes_dos(400.0, 200.0, 0.0), 400.0 / std::sqrt(400.0 * 400.0 - 200.0 * 200.0), 1e-12);
    EXPECT_NEAR(dynes_dos(1e6, 200.0, 1.0), 1.0, 1e-6);
    // Finite gamma leaves a sub-gap floor of about gamma / Delta at E = 0.
    EXPECT_NEAR(dynes_dos(0.0, 200.0, 2.0), 2.0 / std::sqrt(4.0 + 200.0 * 200.0), 1e-12);
}

TEST(Sis, ZeroTemperatureCurrentMatchesEllipticClosedForm) {
    const SisParams p{200.0, 200.0, 0.0, 0.0, 1.0};
    for (double u : {401.0, 410.0, 450.0, 600.0, 1000.0}) {
        const double ours = sis_current(u * 1e-6, p) * 1e6;  // I R_n in uV
        EXPECT_NEAR(ours, oracle::sis_current_t0(u, 200.0), 1e-5 * u) << "u = " << u;
    }
    EXPECT_EQ(sis_current(350e-6, p), 0.0);
}

TEST(Sis, CurrentIsOddAndOhmicAtLargeBias) {
    const SisParams p{200.0, 200.0, 1.0, 0.02, 9000.0};
    EXPECT_DOUBLE_EQ(sis_current(-500e-6, p), -sis_current(500e-6, p));
    EXPECT_NEAR(sis_current(20e-3, p) * 9000.0 / 20e-3, 1.0, 1e-3);
}

TEST(Sis, ThermalSubgapCurrentGrowsWithTemperature) {
    const SisParams cold{200.0, 200.0, 0.0, 0.1, 1.0};
    const SisParams warm{200.0, 200.0, 0.0, 0.3, 1.0};
    EXPECT_GT(sis_current(200e-6, warm), sis_current(200e-6, cold));
    EXPECT_GT(sis_current(200e-6, cold), 0.0);
}

TEST(Sis, RejectsInvalidParams) {
    EXPECT_THROW(sis_current(1e-4, {0.0, 200.0, 0.0, 0.0, 1.0}), ValidationError);
    EXPECT_THROW(sis_current(1e-4, {200.0, 200.0, -1.0, 0.0, 1.0}), ValidationError);
    EXPECT_THROW(sis_current(1e-4, {200.0, 200.0, 0.0, 0.0, 0.0}), ValidationError);
}

TEST(Dynes, NoiselessIvRoundTripAtZeroGamma) {
    // With the gamma floor at 0 the edge is exact; the default 1e-3 ueV floor
    // would round it over sqrt(2 gamma Delta) and bias Delta by ~1e-4.
    const auto t = synth::sis(TraceKind::iv, 200.0, 0.0, 0.0, 9000.0, 0.0, 0);
    DynesOptions opt;
    opt.temperature_k = 0.0;
    opt.min_gamma_uev = 0.0;
    const auto f = fit_dynes(t, opt);
    EXPECT_TRUE(f.fit.converged);
    EXPECT_NEAR(f.gap_uev, 200.0, 200.0 * 1e-6);
    EXPECT_NEAR(f.rn_ohm, 9000.0, 9000.0 * 1e-6);
}

TEST(Dynes, NoisyConductanceRecoversGap) {
    for (double gap : {200.0, 191.0}) {
        const auto t = synth::sis(TraceKind::didv, gap, 2.0, 0.02, 9000.0, 0.01, 7);
        const auto f = fit_dynes(t);
        EXPECT_NEAR(f.gap_uev, gap, 0.01 * gap);
        EXPECT_NEAR(f.rn_ohm, 9000.0, 0.02 * 9000.0);
        EXPECT_GT(f.gamma_uev, 0.5);
        EXPECT_LT(f.gamma_uev, 4.0);
        EXPECT_GT(f.subgap_ratio, 0.0);
        EXPECT_LT(f.subgap_ratio, 0.1);
    }
}

TEST(Dynes, RejectsTracesWithoutGapEdge) {
    auto t = synth::sis(TraceKind::didv, 200.0, 2.0, 0.02, 9000.0, 0.0, 0);
    t.x.resize(20);
    t.y.resize(20);
    EXPECT_THROW(fit_dynes(t), ValidationError);
    auto wrong = synth::decay(TraceKind::t1_decay, 10.0, 1.0, 0.0, 0, 20);
    EXPECT_THROW(fit_dynes(wrong), ValidationError);
}
