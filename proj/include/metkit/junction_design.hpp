#pragma once

// Merged-element junction design: the tunnel junction is both the Josephson
// element and (almost all of) the shunt capacitor.
//
//   geometry -> C_JJ -> C_total -> E_C
//   gap, R_n -> I_c (Ambegaokar-Baratoff, T = 0) -> E_J
//
// Arguments and results use the display units named in each function; all
// arithmetic is done in SI.

#include <cmath>
#include <numbers>
#include <optional>

#include "metkit/error.hpp"
#include "metkit/qubit_core.hpp"
#include "metkit/units.hpp"

namespace metkit::design {

struct JunctionSpec {
    double area_um2 = 0.0;
    double oxide_thickness_nm = 2.0;
    double eps_r = 10.0;
    double rn_room_ohm = 0.0;
    double cold_factor = 1.0;  // R_cold = cold_factor * R_room
    double gap_uev = 200.0;
};

struct DeviceDesign {
    double c_jj_ff = 0.0;
    double c_stray_ff = 0.0;
    double c_total_ff = 0.0;
    double i_c_na = 0.0;
    double e_j_ghz = 0.0;
    double e_c_ghz = 0.0;
    double f01_ghz = 0.0;
    double alpha_ghz = 0.0;
    double ej_over_ec = 0.0;
    double p_jj = 0.0;
};

inline void validate(const JunctionSpec& s) {
    using metkit::detail::require;
    require(std::isfinite(s.area_um2) && s.area_um2 >= 0.0, "junction area must be non-negative");
    require(std::isfinite(s.oxide_thickness_nm) && s.oxide_thickness_nm > 0.0, "oxide thickness must be positive");
    require(std::isfinite(s.eps_r) && s.eps_r >= 1.0, "eps_r must be >= 1");
    require(std::isfinite(s.rn_room_ohm) && s.rn_room_ohm > 0.0, "room-temperature resistance must be positive");
    require(std::isfinite(s.cold_factor) && s.cold_factor > 0.0, "cold_factor must be positive");
    require(std::isfinite(s.gap_uev) && s.gap_uev > 0.0, "gap must be positive");
}

/// Parallel-plate capacitance eps0 eps_r A / d, in fF.
inline double plate_capacitance(double area_um2, double thickness_nm, double eps_r) {
    metkit::detail::require(std::isfinite(thickness_nm) && thickness_nm > 0.0, "plate separation must be positive");
    metkit::detail::require(std::isfinite(area_um2) && area_um2 >= 0.0, "plate area must be non-negative");
    const double farads = units::kVacuumPermittivity * eps_r * (area_um2 * units::kSquareMicron) /
                          (thickness_nm * units::kNano);
    return farads / units::kFemto;
}

/// E_C / h = e^2 / (2 C h), in GHz.
inline double charging_energy(double c_total_ff) {
    metkit::detail::require(std::isfinite(c_total_ff) && c_total_ff > 0.0, "capacitance must be positive");
    const double e = units::kElementaryCharge;
    return e * e / (2.0 * c_total_ff * units::kFemto * units::kPlanck) / units::kGiga;
}

/// Inverse of charging_energy, in fF.
inline double capacitance_for_charging_energy(double e_c_ghz) {
    metkit::detail::require(std::isfinite(e_c_ghz) && e_c_ghz > 0.0, "charging energy must be positive");
    const double e = units::kElementaryCharge;
    return e * e / (2.0 * e_c_ghz * units::kGiga * units::kPlanck) / units::kFemto;
}

/// I_c = pi Delta / (2 e R_cold), in nA.
inline double critical_current(double gap_uev, double rn_room_ohm, double cold_factor = 1.0) {
    using metkit::detail::require;
    require(std::isfinite(gap_uev) && gap_uev > 0.0, "gap must be positive");
    require(rn_room_ohm > 0.0, "resistance must be positive");
    require(std::isfinite(cold_factor) && cold_factor > 0.0, "cold_factor must be positive");
    const double r_cold = cold_factor * rn_room_ohm;
    // Delta / e in volts is numerically gap_uev * 1e-6.
    const double amps = std::numbers::pi * gap_uev * units::kMicro / (2.0 * r_cold);
    return amps / units::kNano;
}

/// Cold resistance that yields `i_c_na` for the given gap.
inline double resistance_for_current(double gap_uev, double i_c_na) {
    metkit::detail::require(gap_uev > 0.0 && i_c_na > 0.0, "gap and current must be positive");
    return std::numbers::pi * gap_uev * units::kMicro / (2.0 * i_c_na * units::kNano);
}

/// E_J / h = Phi0 I_c / (2 pi h) = I_c / (4 pi e), in GHz.
inline double josephson_energy(double i_c_na) {
    metkit::detail::require(std::isfinite(i_c_na) && i_c_na >= 0.0, "critical current must be non-negative");
    return i_c_na * units::kNano / (4.0 * std::numbers::pi * units::kElementaryCharge) / units::kGiga;
}

inline double current_for_josephson_energy(double e_j_ghz) {
    return e_j_ghz * units::kGiga * 4.0 * std::numbers::pi * units::kElementaryCharge / units::kNano;
}

/// p_JJ = C_JJ / C_total.
inline double participation(double c_jj_ff, double c_total_ff) {
    metkit::detail::require(c_total_ff > 0.0, "total capacitance must be positive");
    metkit::detail::require(c_jj_ff >= 0.0 && c_jj_ff <= c_total_ff, "need 0 <= c_jj <= c_total");
    return c_jj_ff / c_total_ff;
}

/// Full forward chain. `ic_override_na` replaces the resistance-derived I_c.
inline DeviceDesign design_forward(const JunctionSpec& spec, double c_stray_ff,
                                   std::optional<double> ic_override_na = std::nullopt) {
    validate(spec);
    metkit::detail::require(spec.area_um2 > 0.0, "junction area must be positive for a device design");
    metkit::detail::require(std::isfinite(c_stray_ff) && c_stray_ff >= 0.0, "stray capacitance must be non-negative");

    DeviceDesign d;
    d.c_jj_ff = plate_capacitance(spec.area_um2, spec.oxide_thickness_nm, spec.eps_r);
    d.c_stray_ff = c_stray_ff;
    d.c_total_ff = d.c_jj_ff + c_stray_ff;
    d.p_jj = participation(d.c_jj_ff, d.c_total_ff);
    d.e_c_ghz = charging_energy(d.c_total_ff);
    d.i_c_na = ic_override_na ? *ic_override_na : critical_current(spec.gap_uev, spec.rn_room_ohm, spec.cold_factor);
    d.e_j_ghz = josephson_energy(d.i_c_na);
    d.ej_over_ec = d.e_j_ghz / d.e_c_ghz;
    const auto s = qubit::spectrum({d.e_j_ghz, d.e_c_ghz, 0.0, 20}, 3);
    d.f01_ghz = s.f01;
    d.alpha_ghz = s.alpha;
    return d;
}

struct InverseTargets {
    double f01_ghz = 0.0;
    double alpha_ghz = 0.0;  // negative
    double oxide_thickness_nm = 2.0;
    double eps_r = 10.0;
    double c_stray_ff = 0.0;
    double gap_uev = 200.0;
    double cold_factor = 1.0;
};

/// Junction area and room-temperature resistance hitting (f01, alpha).
inline JunctionSpec design_inverse(const InverseTargets& t) {
    using metkit::detail::require;
    require(t.oxide_thickness_nm > 0.0 && t.eps_r >= 1.0, "invalid dielectric");
    require(t.c_stray_ff >= 0.0, "stray capacitance must be non-negative");
    require(t.gap_uev > 0.0 && t.cold_factor > 0.0, "gap and cold_factor must be positive");

    const auto energies = qubit::invert_spectroscopy(t.f01_ghz, t.alpha_ghz);
    const double c_total = capacitance_for_charging_energy(energies.e_c);
    const double c_jj = c_total - t.c_stray_ff;
    if (c_jj <= 0.0) {
        throw ComputationError("target charging energy needs less capacitance than the stray contribution alone");
    }
    const double ff_per_um2 = plate_capacitance(1.0, t.oxide_thickness_nm, t.eps_r);
    const double i_c = current_for_josephson_energy(energies.e_j);

    JunctionSpec spec;
    spec.area_um2 = c_jj / ff_per_um2;
    spec.oxide_thickness_nm = t.oxide_thickness_nm;
    spec.eps_r = t.eps_r;
    spec.cold_factor = t.cold_factor;
    spec.gap_uev = t.gap_uev;
    spec.rn_room_ohm = resistance_for_current(t.gap_uev, i_c) / t.cold_factor;
    return spec;
}

}  // namespace metkit::design
