#ifndef SBSCAV_CONSTANTS_HPP
#define SBSCAV_CONSTANTS_HPP

#include <numbers>

// CODATA 2018 values, SI units throughout.
namespace sbscav::phys {

inline constexpr double pi = std::numbers::pi_v<double>;

/// c — speed of light in vacuum [m/s]
inline constexpr double c0 = 299'792'458.0;

/// h — Planck constant [J s]
inline constexpr double h_planck = 6.626'070'15e-34;

/// hbar — reduced Planck constant [J s]
inline constexpr double hbar = h_planck / (2.0 * pi);

/// eps0 — vacuum permittivity [F/m]
inline constexpr double eps0 = 8.854'187'8128e-12;

/// eta0 — impedance of free space [Ohm], 1/(eps0 c)
inline constexpr double eta0 = 1.0 / (eps0 * c0);

/// k_B — Boltzmann constant [J/K]
inline constexpr double k_boltzmann = 1.380'649e-23;

} // namespace sbscav::phys

#endif
