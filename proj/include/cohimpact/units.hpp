#pragma once

#include <string_view>

namespace cohimpact::units {

// Internal system: angular frequency in rad/ps with hbar = 1, time in ps.
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLightCmPerPs = 0.0299792458;  // c in cm/ps
inline constexpr double kRadPsPerWavenumber = 2.0 * kPi * kSpeedOfLightCmPerPs;
// k_B / (h c) in cm^-1 per K.
inline constexpr double kWavenumberPerKelvin = 0.695034800;
inline constexpr double kRadPsPerKelvin = kWavenumberPerKelvin * kRadPsPerWavenumber;

enum class Unit { wavenumber, rad_per_ps, per_ps, per_fs, fs, ps, kelvin };

enum class Dimension { energy, time };

Unit parse_unit(std::string_view text);
std::string_view unit_name(Unit u);
Dimension dimension_of(Unit u);

// Energy-like quantities and times convert into each other by reciprocal
// (rate = 1/time with hbar = 1).
double convert_units(double value, Unit from, Unit to);

inline double wavenumber(double cm) { return cm * kRadPsPerWavenumber; }
inline double kelvin(double k) { return k * kRadPsPerKelvin; }
inline double femtoseconds(double fs) { return fs * 1e-3; }

}  // namespace cohimpact::units
