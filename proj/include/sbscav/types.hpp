#ifndef SBSCAV_TYPES_HPP
#define SBSCAV_TYPES_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "sbscav/constants.hpp"

namespace sbscav {

/// Raised when a configuration violates a physical invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an integration leaves the physically meaningful regime.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Geometry, mirrors and fiber constants of the cavity.  Ground truth for
/// both the spatial simulator and the single-mode model.
///
/// beta_mm is the net power transmission of the free-space/fiber interface
/// per cavity round trip (mode-matching loss happens when coupling into the
/// fiber; the outgoing crossing is lossless).
struct CavityFiberConfig {
    double L_free = 0.1;          // free-space arm length [m]
    double L_fib = 10.003;        // fiber length [m]
    int N_elements = 145;         // number of fiber grid elements
    double n_refr = 1.4496;       // fiber refractive index
    double R1 = 0.85;             // input mirror power reflectivity
    double R2 = 1.0;              // far mirror power reflectivity
    double beta_mm = 0.70;        // interface power transmission per round trip
    double alpha_loss = 5.62e-4;  // fiber power attenuation [1/m]
    double g_B = 1.13e-11;        // Brillouin gain [m/W]
    double lambda_p = 1.064e-6;   // pump wavelength [m]
    double mfd = 6.6e-6;          // fiber mode-field diameter [m]
    double w_free = 1.0e-3;       // free-space beam waist diameter [m]

    void validate() const {
        if (!(R1 > 0.0 && R1 <= 1.0))
            throw ConfigError("R1 must be in (0,1], got " + std::to_string(R1));
        if (!(R2 > 0.0 && R2 <= 1.0))
            throw ConfigError("R2 must be in (0,1], got " + std::to_string(R2));
        if (!(beta_mm > 0.0 && beta_mm <= 1.0))
            throw ConfigError("beta_mm must be in (0,1], got " + std::to_string(beta_mm));
        if (L_free <= 0.0 || L_fib <= 0.0)
            throw ConfigError("cavity arm lengths must be positive");
        if (N_elements < 1) throw ConfigError("N_elements must be >= 1");
        if (n_refr < 1.0) throw ConfigError("n_refr must be >= 1");
        if (alpha_loss < 0.0 || g_B < 0.0)
            throw ConfigError("losses and gains must be nonnegative");
        if (lambda_p <= 0.0) throw ConfigError("lambda_p must be positive");
        if (mfd <= 0.0) throw ConfigError("mode-field diameter must be positive");
        if (w_free <= 0.0) throw ConfigError("free-space waist must be positive");
        // Uniform transit time per element: L_fib = L_free * N / n.
        const double expect = L_free * N_elements / n_refr;
        if (std::abs(L_fib - expect) > 1e-4 * L_fib)
            throw ConfigError("grid not uniform in transit time: L_fib=" +
                              std::to_string(L_fib) + " but L_free*N/n=" +
                              std::to_string(expect));
    }

    /// Fiber core cross section pi*(mfd/2)^2 [m^2].
    double fiber_area() const {
        return phys::pi * (mfd / 2.0) * (mfd / 2.0);
    }
    /// Mode volume of the guided light [m^3].
    double fiber_mode_volume() const { return L_fib * fiber_area(); }
    /// One-way optical path length L_free + n*L_fib [m].
    double optical_path() const { return L_free + n_refr * L_fib; }
    /// Pump angular frequency [rad/s].
    double omega_laser() const { return 2.0 * phys::pi * phys::c0 / lambda_p; }
};

/// Everything the linearized single-mode model needs.
struct SingleModeParams {
    double kappa = 2.0 * phys::pi * 432.9e3;     // half-linewidth [rad/s]
    double kappa_ex = 2.0 * phys::pi * 111.8e3;  // input coupling rate [rad/s]
    double Delta = 0.0;       // detuning omega_cav - omega_L [rad/s]
    double G = 0.0;           // cavity frequency pull [rad/s per m]
    double G_B = 0.0;         // temporal Brillouin gain [rad/s per photon]
    double a_in_flux = 0.0;   // drive amplitude [sqrt(photons/s)]
    double omega_L = 2.0 * phys::pi * phys::c0 / 1.064e-6;  // laser frequency [rad/s]

    void validate() const {
        if (!(kappa_ex > 0.0 && kappa_ex <= kappa))
            throw ConfigError("need 0 < kappa_ex <= kappa");
        if (G_B < 0.0) throw ConfigError("G_B must be nonnegative");
    }
};

/// Mechanical oscillator coupled to the input mirror.
struct MechOscillator {
    double mass = 1.0e-10;                       // [kg]
    double Omega_m = 2.0 * phys::pi * 20.0e3;    // angular resonance [rad/s]
    double Gamma_m = 2.0 * phys::pi * 4.0;       // angular damping [rad/s]
    double T_bath = 300.0;                       // [K]

    void validate() const {
        if (mass <= 0.0) throw ConfigError("mass must be positive");
        if (Omega_m <= 0.0) throw ConfigError("Omega_m must be positive");
        if (Gamma_m < 0.0) throw ConfigError("Gamma_m must be nonnegative");
        if (T_bath < 0.0) throw ConfigError("T_bath must be nonnegative");
    }

    /// Thermal RMS displacement sqrt(kB T / (m Omega^2)) [m].
    double thermal_rms() const {
        return std::sqrt(phys::k_boltzmann * T_bath / (mass * Omega_m * Omega_m));
    }
    double quality_factor() const { return Omega_m / Gamma_m; }
};

/// Quantities derived from a CavityFiberConfig.  Linewidths are half-widths
/// in ordinary frequency; finesse = FSR / full width.
struct DerivedCavity {
    double fsr = 0.0;              // free spectral range [Hz]
    double kappa_L = 0.0;          // Lorentzian half-linewidth [Hz]
    double finesse_L = 0.0;
    double kappa_A = 0.0;          // Airy half-linewidth [Hz]
    double finesse_A = 0.0;
    double round_trip_time = 0.0;  // [s]
    bool diverged = false;         // lossless cavity, finesse unbounded
};

/// Thermo-optic noise environment of the fiber.
struct NoiseEnv {
    double q = 6.7e-6;        // thermo-optic coefficient [1/K]
    double kappa_t = 1.35;    // thermal conductivity [W/(m K)]
    double D = 8.2e-7;        // thermal diffusivity [m^2/s]
    double w0 = 3.3e-6;       // mode-field radius [m]
    double a_f = 62.5e-6;     // fiber outer radius [m]
    double T = 300.0;         // temperature [K]
    double L = 10.003;        // fiber length [m]
    double lambda = 1.064e-6; // wavelength [m]

    void validate() const {
        if (q <= 0 || kappa_t <= 0 || D <= 0 || w0 <= 0 || a_f <= 0 || T <= 0 ||
            L <= 0 || lambda <= 0)
            throw ConfigError("all noise-environment parameters must be positive");
        if (!(2.0 / w0 > 2.0 / a_f))
            throw ConfigError("need k_max = 2/w0 > k_min = 2/a_f");
    }

    /// Cryogenic (77 K) parameter set for fused silica fiber.
    static NoiseEnv cryo_77K(double fiber_length) {
        NoiseEnv env;
        env.q = 2.8e-6;
        env.kappa_t = 0.52;
        env.D = 2.53e-6;
        env.T = 77.0;
        env.L = fiber_length;
        return env;
    }
    /// Room-temperature (300 K) parameter set.
    static NoiseEnv room_300K(double fiber_length) {
        NoiseEnv env;
        env.L = fiber_length;
        return env;
    }
};

} // namespace sbscav

#endif
