#pragma once

#include <cmath>
#include <numbers>

namespace surfmimo {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kMetersPerFoot = 0.3048;
inline constexpr double kVacuumPermeability = 1.25663706212e-6;  // H/m

// Power (dB) of a linear amplitude ratio and back.
inline double amplitude_db(double ratio) { return 20.0 * std::log10(ratio); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline constexpr double feet(double ft) { return ft * kMetersPerFoot; }

}  // namespace surfmimo
