// units.hpp — unit conversions between laboratory units (fs, cm⁻¹) and atomic units.
//
// Everything inside the library runs in atomic units with ħ = 1, so an energy
// in Hartree is also an angular frequency in inverse atomic time units.

#pragma once

#include <cmath>

namespace spoo::units {

inline constexpr double kAtomicTimePerFs = 41.341374575751;
inline constexpr double kHartreePerWavenumber = 4.5563352529e-6;

constexpr double to_atomic_time(double fs) noexcept { return fs * kAtomicTimePerFs; }
constexpr double to_femtoseconds(double au) noexcept { return au / kAtomicTimePerFs; }

constexpr double wavenumber_to_angular_frequency(double invcm) noexcept {
    return invcm * kHartreePerWavenumber;
}
constexpr double angular_frequency_to_wavenumber(double au) noexcept {
    return au / kHartreePerWavenumber;
}

// Chirp rates carry time² units.
constexpr double fs2_to_atomic(double fs2) noexcept {
    return fs2 * kAtomicTimePerFs * kAtomicTimePerFs;
}
constexpr double atomic_to_fs2(double au) noexcept {
    return au / (kAtomicTimePerFs * kAtomicTimePerFs);
}

}  // namespace spoo::units
