#ifndef SBSCAV_LINEAR_MODEL_HPP
#define SBSCAV_LINEAR_MODEL_HPP

#include <cmath>
#include <complex>

#include "sbscav/constants.hpp"
#include "sbscav/types.hpp"

// Analytic single-mode theory.  Conventions: Delta = omega_cav - omega_L
// (red detuned means Delta > 0), adot = -(kappa + i Delta) a + ... so the
// bare steady state is a = sqrt(2 kappa_ex) a_in / (kappa + i Delta).
// Positive mirror displacement raises the detuning by G x, and the
// radiation force on the oscillator is -hbar G (a* da + a da* + dB).

namespace sbscav {

using cplx = std::complex<double>;

struct SteadyState {
    cplx a_bar{0.0, 0.0};    // intracavity pump amplitude [sqrt(photons)]
    double B_bar = 0.0;      // Stokes intensity [photons]
    bool above_threshold = false;
};

/// Mean-field steady state; above the Brillouin threshold the pump photon
/// number clamps at 2 kappa / G_B and the Stokes takes the rest.
inline SteadyState steady_state(const SingleModeParams& p) {
    p.validate();
    SteadyState s;
    const double ain2 = p.a_in_flux * p.a_in_flux;
    if (p.G_B > 0.0) {
        const double disc = p.G_B * ain2 * p.kappa_ex / p.kappa - p.Delta * p.Delta;
        if (disc > 0.0 && std::sqrt(disc) > p.kappa) {
            s.above_threshold = true;
            s.B_bar = 2.0 / p.G_B * (std::sqrt(disc) - p.kappa);
        }
    }
    s.a_bar = std::sqrt(2.0 * p.kappa_ex) * p.a_in_flux /
              cplx(p.kappa + 0.5 * p.G_B * s.B_bar, p.Delta);
    return s;
}

/// Smallest input power [W] crossing the Brillouin threshold at detuning
/// Delta, from the closed-form inversion of the threshold condition.
inline double threshold_power(const SingleModeParams& p, double Delta) {
    if (p.G_B <= 0.0) throw ConfigError("threshold undefined for G_B = 0");
    const double ain2 =
        p.kappa * (p.kappa * p.kappa + Delta * Delta) / (p.G_B * p.kappa_ex);
    return phys::hbar * p.omega_L * ain2;
}

/// The response kernels of the linearized fluctuation equations.
/// f couples d a-hat to itself, g to its conjugate partner; h closes the
/// pair elimination.
class ResponseKernels {
public:
    ResponseKernels(const SingleModeParams& p, const SteadyState& s)
        : kappa_(p.kappa), Delta_(p.Delta), GB_(p.G_B), a_(s.a_bar), B_(s.B_bar) {
        a2_ = std::norm(a_);
    }

    cplx f(double w) const {
        check(w);
        double reactive = Delta_ - w;
        if (B_ > 0.0) reactive += GB_ * GB_ * B_ * a2_ / (2.0 * w);
        return {kappa_ + 0.5 * GB_ * B_, reactive};
    }

    cplx g(double w) const {
        check(w);
        if (B_ <= 0.0) return {0.0, 0.0};
        return cplx(0.0, 1.0) * (GB_ * GB_ * B_ / (2.0 * w)) * (a_ * a_);
    }

    cplx h(double w) const {
        if (B_ <= 0.0) return {1.0, 0.0};
        return 1.0 - g(w) * std::conj(g(-w)) / (f(w) * std::conj(f(-w)));
    }

    /// da-hat[w] per unit x-hat[w], for frequency pull G.
    cplx pump_response(double w, double G) const {
        const cplx i(0.0, 1.0);
        return -i * G * (a_ + std::conj(a_) * g(w) / std::conj(f(-w))) / (f(w) * h(w));
    }

    /// (da-hat)*[w] per unit x-hat[w] (the conjugate partner at +w).
    cplx pump_response_conj(double w, double G) const {
        const cplx i(0.0, 1.0);
        return i * G * (std::conj(a_) + a_ * std::conj(g(-w)) / f(w)) /
               (std::conj(f(-w)) * std::conj(h(-w)));
    }

    double B_bar() const { return B_; }
    cplx a_bar() const { return a_; }

private:
    void check(double w) const {
        if (B_ > 0.0 && w == 0.0)
            throw NumericalError("kernel evaluation at omega = 0 with B_bar > 0");
    }
    double kappa_, Delta_, GB_;
    cplx a_;
    double B_, a2_;
};

/// Optomechanical contribution to the inverse mechanical susceptibility
/// [N/m], chi_opt^-1(w) = hbar G (1 + i G_B B/w)(a* da + a da*)/x.
inline cplx chi_opt_inv(const SingleModeParams& p, const SteadyState& s, double w) {
    const ResponseKernels k(p, s);
    const cplx da = k.pump_response(w, p.G);
    const cplx dac = k.pump_response_conj(w, p.G);
    cplx photon_weight(1.0, 0.0);
    if (s.B_bar > 0.0) photon_weight += cplx(0.0, 1.0) * (p.G_B * s.B_bar / w);
    return phys::hbar * p.G * photon_weight * (std::conj(s.a_bar) * da + s.a_bar * dac);
}

struct DampingShift {
    double Gamma_opt = 0.0;  // optomechanical damping rate [rad/s]
    double dOmega_m = 0.0;   // mechanical frequency shift [rad/s]
};

/// Weak-coupling damping rate and spring shift evaluated at the bare
/// mechanical frequency.
inline DampingShift damping_and_shift(const SingleModeParams& p,
                                      const MechOscillator& mech,
                                      const SteadyState& s) {
    const cplx chi = chi_opt_inv(p, s, mech.Omega_m);
    DampingShift r;
    r.Gamma_opt = -chi.imag() / (mech.mass * mech.Omega_m);
    r.dOmega_m = chi.real() / (2.0 * mech.mass * mech.Omega_m);
    return r;
}

/// Textbook two-sideband expressions for G_B = 0, used as an independent
/// oracle for the full machinery.
inline DampingShift two_sideband_reference(const SingleModeParams& p,
                                           const MechOscillator& mech,
                                           double photons) {
    const double k = p.kappa, D = p.Delta, W = mech.Omega_m;
    const double C = phys::hbar * p.G * p.G * photons / (mech.mass * W);
    DampingShift r;
    r.Gamma_opt = C * (k / (k * k + (D - W) * (D - W)) - k / (k * k + (D + W) * (D + W)));
    r.dOmega_m = -0.5 * C * ((D - W) / (k * k + (D - W) * (D - W)) +
                             (D + W) / (k * k + (D + W) * (D + W)));
    return r;
}

} // namespace sbscav

#endif
