#ifndef SBSCAV_CAVITY_HPP
#define SBSCAV_CAVITY_HPP

#include <cmath>
#include <limits>

#include "sbscav/constants.hpp"
#include "sbscav/types.hpp"

namespace sbscav {

/// Round-trip field amplitude survival factor: both mirrors, fiber
/// attenuation over 2*L_fib and the interface loss once per round trip.
inline double round_trip_amplitude(const CavityFiberConfig& cfg) {
    return std::sqrt(cfg.R1 * cfg.R2 * cfg.beta_mm) *
           std::exp(-cfg.alpha_loss * cfg.L_fib);
}

/// Internal round-trip amplitude excluding the input mirror (what the
/// back "effective mirror" looks like from inside).
inline double internal_round_trip_amplitude(const CavityFiberConfig& cfg) {
    return std::sqrt(cfg.R2 * cfg.beta_mm) * std::exp(-cfg.alpha_loss * cfg.L_fib);
}

/// FSR, linewidths and finesses of the cold cavity.
inline DerivedCavity derive_cavity(const CavityFiberConfig& cfg) {
    cfg.validate();
    const double path = cfg.optical_path();
    if (path <= 0.0) throw ConfigError("zero total optical path");

    DerivedCavity d;
    d.round_trip_time = 2.0 * path / phys::c0;
    d.fsr = 1.0 / d.round_trip_time;

    const double r = round_trip_amplitude(cfg);
    if (r >= 1.0 - 1e-12) {
        d.diverged = true;
        d.kappa_L = d.kappa_A = 0.0;
        d.finesse_L = d.finesse_A = std::numeric_limits<double>::infinity();
        return d;
    }
    // Lorentzian: field decay rate -ln(r)/t_rt as half-width.
    d.kappa_L = -std::log(r) / d.round_trip_time / (2.0 * phys::pi);
    d.finesse_L = d.fsr / (2.0 * d.kappa_L);
    // Airy: exact half-width of the Airy lineshape.
    const double s = (1.0 - r) / (2.0 * std::sqrt(r));
    d.kappa_A = 2.0 * std::asin(std::min(1.0, s)) / d.round_trip_time / (2.0 * phys::pi);
    d.finesse_A = d.fsr / (2.0 * d.kappa_A);
    return d;
}

/// Airy finesse implied by a round-trip amplitude factor r in (0,1).
inline double airy_finesse_from_amplitude(double r) {
    if (r <= 0.0 || r >= 1.0) return std::numeric_limits<double>::quiet_NaN();
    return phys::pi / (2.0 * std::asin((1.0 - r) / (2.0 * std::sqrt(r))));
}

/// Photon flux of a beam of power P [W] at wavelength lambda [m], in
/// photons per second.
inline double photon_flux(double power, double lambda) {
    if (power < 0.0) throw ConfigError("power must be nonnegative");
    return power * lambda / (phys::h_planck * phys::c0);
}

/// Spatial Brillouin amplitude coupling for sqrt(W)-normalized traveling
/// waves: dE_S/dz = -(alpha/2) E_S - (g_B/(2 A_fib)) |E_p|^2 E_S, so the
/// Stokes power gain rate is g_B * I_pump exactly.  [1/(W m)]
inline double brillouin_spatial_coupling(const CavityFiberConfig& cfg) {
    if (cfg.mfd <= 0.0) throw ConfigError("zero mode-field diameter");
    return cfg.g_B / (2.0 * cfg.fiber_area());
}

/// Amplitude coupling c_B for fields normalized to <u> = n^2 eps0 |E|^2/2,
/// i.e. dE_S/dz = -c_B |E_p|^2 E_S with the same power gain g_B * I_pump.
inline double brillouin_amplitude_coupling(const CavityFiberConfig& cfg) {
    return cfg.n_refr * cfg.g_B / (4.0 * phys::eta0);
}

/// Temporal Brillouin gain per intracavity pump photon [rad/s], obtained
/// from c_B by the mode-volume normalization of the single-mode model.
inline double brillouin_temporal_gain(const CavityFiberConfig& cfg) {
    if (cfg.mfd <= 0.0) throw ConfigError("zero mode-field diameter");
    const double cB = brillouin_amplitude_coupling(cfg);
    const double n3 = cfg.n_refr * cfg.n_refr * cfg.n_refr;
    return 2.0 * phys::hbar * cfg.omega_laser() * phys::c0 * cB /
           (cfg.fiber_mode_volume() * phys::eps0 * n3);
}

/// Cavity frequency pull per unit mirror displacement [rad/s per m].
/// Positive displacement shortens the cavity and raises the resonance.
inline double frequency_pull(const CavityFiberConfig& cfg) {
    return cfg.omega_laser() / cfg.optical_path();
}

/// Single-mode parameters consistent with a spatial-simulator config:
/// kappa from the round-trip survival factor, kappa_ex from the input
/// mirror alone.  Delta is set by the caller.
inline SingleModeParams single_mode_from(const CavityFiberConfig& cfg,
                                         double input_power_W,
                                         double Delta = 0.0) {
    cfg.validate();
    const double t_rt = 2.0 * cfg.optical_path() / phys::c0;
    SingleModeParams p;
    p.kappa = -std::log(round_trip_amplitude(cfg)) / t_rt;
    p.kappa_ex = -0.5 * std::log(cfg.R1) / t_rt;
    p.Delta = Delta;
    p.G = frequency_pull(cfg);
    p.G_B = brillouin_temporal_gain(cfg);
    p.omega_L = cfg.omega_laser();
    p.a_in_flux = std::sqrt(photon_flux(input_power_W, cfg.lambda_p));
    return p;
}

/// Conversion between the clamped intracavity photon number of the
/// single-mode model and the direction-summed pump intensity of the
/// spatial picture: I+ + I- = n_photons * hbar omega c / (n A L).
inline double photons_to_intensity_sum(const CavityFiberConfig& cfg, double n_photons) {
    return n_photons * phys::hbar * cfg.omega_laser() * phys::c0 /
           (cfg.n_refr * cfg.fiber_area() * cfg.L_fib);
}

} // namespace sbscav

#endif
