#pragma once

#include <numbers>

namespace inac::constants {

inline constexpr double kSpeedOfLight = 299'792'458.0;     // m/s
inline constexpr double kEarthMu = 3.986004418e14;         // m^3/s^2 (WGS-84)
inline constexpr double kEarthRotationRate = 7.2921151467e-5;  // rad/s (WGS-84)
inline constexpr double kWgs84A = 6'378'137.0;             // m
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);
inline constexpr double kJ2 = 1.08262668e-3;
inline constexpr double kBoltzmann = 1.380649e-23;         // J/K

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

inline constexpr double kSecondsPerDay = 86'400.0;
inline constexpr double kSiderealDay = 86'164.0905;        // s

/// GPS L1 / Galileo E1 carrier, the default for navigation-band budgets.
inline constexpr double kL1CarrierHz = 1.57542e9;
/// Ku-band downlink, the default for LEO communication budgets.
inline constexpr double kKuCarrierHz = 12.0e9;

}  // namespace inac::constants
