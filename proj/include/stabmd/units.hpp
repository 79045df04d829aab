#pragma once

#include <cmath>

// Internal unit system: length in angstrom, time in femtoseconds, energy in
// kcal/mol, mass in amu, temperature in kelvin. Momenta are amu*A/fs and
// forces kcal/(mol*A). Conversions happen only at file-format boundaries.
namespace stabmd::units {

// Boltzmann constant, kcal/(mol*K).
inline constexpr double kBoltzmann = 0.0019872041;

// 1 amu*A^2/fs^2 expressed in kcal/mol (1 amu = 1 g/mol, 1 kcal = 4184 J).
inline constexpr double kKcalPerMechanical = 1.0e7 / 4184.0;

// Speed of light in cm/fs, for wavenumber -> angular frequency.
inline constexpr double kSpeedOfLightCmFs = 2.99792458e-5;

// 1 A^2/fs in m^2/s (diffusivity reporting).
inline constexpr double kA2FsToM2S = 1.0e-5;

// Angular frequency (1/fs) of a vibrational wavenumber given in 1/cm.
inline double angular_frequency(double wavenumber_cm) {
  return 2.0 * M_PI * kSpeedOfLightCmFs * wavenumber_cm;
}

}  // namespace stabmd::units
