#pragma once

#include <numbers>

// CODATA 2018 exact SI values.
namespace metkit::units {

inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kPlanck = 6.62607015e-34;             // J s
inline constexpr double kBoltzmann = 1.380649e-23;            // J/K
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);  // Wb

inline constexpr double kFemto = 1e-15;
inline constexpr double kNano = 1e-9;
inline constexpr double kMicro = 1e-6;
inline constexpr double kGiga = 1e9;
inline constexpr double kSquareMicron = 1e-12;  // m^2

/// Boltzmann constant in eV/K.
inline constexpr double kBoltzmannEv = kBoltzmann / kElementaryCharge;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace metkit::units
