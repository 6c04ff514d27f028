#pragma once

#include <numbers>
#include <stdexcept>

namespace qdlearn {

// CODATA 2018. Energies are handled in wavenumbers (cm^-1), time in ps
// internally, so hbar = 1 and frequencies are rad/ps.
inline constexpr double kSpeedOfLightCmPerPs = 0.0299792458;      // c
inline constexpr double kBoltzmannCm1PerKelvin = 0.6950348004;    // k_B/(h c)

// cm^-1 -> rad/ps, omega = 2 pi c x.
inline double cm1_to_angular_frequency(double wavenumber_cm1) {
    return 2.0 * std::numbers::pi * kSpeedOfLightCmPerPs * wavenumber_cm1;
}

// k_B T as a wavenumber (cm^-1).
inline double thermal_energy_cm1(double temperature_k) {
    if (!(temperature_k > 0.0))
        throw std::invalid_argument("thermal_energy_cm1: temperature must be > 0 K");
    return kBoltzmannCm1PerKelvin * temperature_k;
}

}  // namespace qdlearn
