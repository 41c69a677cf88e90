#pragma once

// CODATA-2018 physical constants (SI).
namespace ionlattice::constants {

inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double planck = 6.62607015e-34;                // J s
inline constexpr double hbar = 1.054571817e-34;                 // J s
inline constexpr double boltzmann = 1.380649e-23;               // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;   // kg

// e^2 / (4 pi eps0), the Coulomb pair prefactor in J m.
inline constexpr double coulomb_prefactor =
    elementary_charge * elementary_charge / (4.0 * 3.14159265358979323846 * vacuum_permittivity);

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

} // namespace ionlattice::constants
