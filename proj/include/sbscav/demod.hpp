#ifndef SBSCAV_DEMOD_HPP
#define SBSCAV_DEMOD_HPP

#include <cmath>
#include <vector>

#include "sbscav/lattice.hpp"
#include "sbscav/parallel.hpp"
#include "sbscav/types.hpp"

namespace sbscav {

/// Force quadratures and the derived optomechanical rates from one
/// prescribed-motion run.  Quadratures are in the oscillator sign
/// convention (positive displacement shortens the cavity).
struct DemodResult {
    double Delta = 0.0;        // [rad/s]
    double Gamma_opt = 0.0;    // [rad/s]
    double dOmega_m = 0.0;     // [rad/s]
    double I_pump = 0.0;       // in-phase force, pump contribution [N]
    double Q_pump = 0.0;       // quadrature force, pump contribution [N]
    double I_stokes = 0.0;     // [N]
    double Q_stokes = 0.0;     // [N]
    double I_total = 0.0;      // [N]
    double Q_total = 0.0;      // [N]
    double x_amp = 0.0;        // drive amplitude used [m]
    bool equilibrated = false; // cavity settled before demodulation
    bool converged_run = true; // no numerical failure
};

struct DemodOptions {
    int periods = 20;          // measurement window [mechanical periods]
    double x_amp = 0.0;        // 0 -> thermal RMS amplitude
    int refinement = 1;
    EquilibriumOptions equilibrium{1e-8, 2e-4, 30'000'000, 64};
};

/// Drive the input mirror sinusoidally, record the radiation force and
/// demodulate it in phase and in quadrature with the motion.
inline DemodResult demodulate(const CavityFiberConfig& cfg, const MechOscillator& mech,
                              double Delta, double P_in, const DemodOptions& opt = {}) {
    mech.validate();
    DemodResult out;
    out.Delta = Delta;
    const double x_amp = opt.x_amp > 0.0 ? opt.x_amp : mech.thermal_rms();
    out.x_amp = x_amp;

    DriveSpec drive;
    drive.P_in = P_in;
    drive.Delta0 = Delta;
    Propagator prop(cfg, drive, opt.refinement);

    try {
        // settle the cavity, then the driven response
        const auto eq = prop.run_to_equilibrium(opt.equilibrium);
        out.equilibrated = eq.converged;
        prop.enable_motion(x_amp, mech.Omega_m);
        const double T_m = 2.0 * phys::pi / mech.Omega_m;
        const double pre_roll = std::max(T_m, 0.5 * eq.converged_t);
        const long pre_steps = static_cast<long>(std::llround(pre_roll / prop.dt()));

        // keep the drive phase reference: demodulation phasor runs in
        // lockstep with the motion phasor from the enable time
        const double dt = prop.dt();
        const double ca = std::cos(mech.Omega_m * dt);
        const double sa = std::sin(mech.Omega_m * dt);
        double c = 1.0, s = 0.0;
        auto advance_phasor = [&] {
            const double cn = c * ca - s * sa;
            const double sn = s * ca + c * sa;
            c = cn;
            s = sn;
        };
        for (long i = 0; i < pre_steps; ++i) {
            prop.step();
            advance_phasor();
        }

        const long steps = static_cast<long>(
            std::llround(opt.periods * T_m / dt));
        // least-squares projection onto {1, sin, cos} accumulated on the fly
        double Ss = 0, Sc = 0, Sss = 0, Scc = 0, Ssc = 0;
        double Fp_s = 0, Fp_c = 0, Fp_1 = 0;
        double Fs_s = 0, Fs_c = 0, Fs_1 = 0;
        long renorm = 0;
        for (long i = 0; i < steps; ++i) {
            prop.step();
            const auto f = prop.force();
            // oscillator x convention: positive shortens, radiation pushes out
            const double fp = -f.pump;
            const double fs = -f.stokes;
            Ss += s;
            Sc += c;
            Sss += s * s;
            Scc += c * c;
            Ssc += s * c;
            Fp_s += fp * s;
            Fp_c += fp * c;
            Fp_1 += fp;
            Fs_s += fs * s;
            Fs_c += fs * c;
            Fs_1 += fs;
            advance_phasor();
            if (++renorm == 65536) {
                renorm = 0;
                const double m = 1.0 / std::sqrt(c * c + s * s);
                c *= m;
                s *= m;
            }
        }
        const double N = static_cast<double>(steps);
        // solve the 3x3 normal equations for c0 + I sin + Q cos
        auto project = [&](double F1, double Fsn, double Fcs, double& I, double& Q) {
            double a[3][3] = {{N, Ss, Sc}, {Ss, Sss, Ssc}, {Sc, Ssc, Scc}};
            double b[3] = {F1, Fsn, Fcs};
            for (int col = 0; col < 3; ++col) {
                int piv = col;
                for (int r = col + 1; r < 3; ++r)
                    if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
                std::swap(a[col], a[piv]);
                std::swap(b[col], b[piv]);
                for (int r = 0; r < 3; ++r) {
                    if (r == col) continue;
                    const double f = a[r][col] / a[col][col];
                    for (int k = col; k < 3; ++k) a[r][k] -= f * a[col][k];
                    b[r] -= f * b[col];
                }
            }
            I = b[1] / a[1][1];
            Q = b[2] / a[2][2];
        };
        project(Fp_1, Fp_s, Fp_c, out.I_pump, out.Q_pump);
        project(Fs_1, Fs_s, Fs_c, out.I_stokes, out.Q_stokes);
        out.I_total = out.I_pump + out.I_stokes;
        out.Q_total = out.Q_pump + out.Q_stokes;
        out.dOmega_m = -out.I_total / (2.0 * mech.mass * mech.Omega_m * x_amp);
        out.Gamma_opt = -out.Q_total / (mech.mass * mech.Omega_m * x_amp);
    } catch (const NumericalError&) {
        out.converged_run = false;
    }
    return out;
}

/// Demodulate across a detuning grid; points run in parallel.
inline std::vector<DemodResult> sweep_damping(const CavityFiberConfig& cfg,
                                              const MechOscillator& mech,
                                              const std::vector<double>& detunings,
                                              double P_in, const DemodOptions& opt = {},
                                              int jobs = 0) {
    std::vector<DemodResult> out(detunings.size());
    parallel_for(
        static_cast<long>(detunings.size()),
        [&](long i) { out[i] = demodulate(cfg, mech, detunings[i], P_in, opt); }, jobs);
    return out;
}

} // namespace sbscav

#endif
