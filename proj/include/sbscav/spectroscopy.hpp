#ifndef SBSCAV_SPECTROSCOPY_HPP
#define SBSCAV_SPECTROSCOPY_HPP

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "sbscav/airy.hpp"
#include "sbscav/cavity.hpp"
#include "sbscav/lattice.hpp"
#include "sbscav/parallel.hpp"

namespace sbscav {

/// Laser frequency ramp for a dynamic cavity scan.
struct SweepSpec {
    double span_fsr = 2.5;   // scanned range [free spectral ranges]
    double duration = 1e-3;  // [s]
    int direction = +1;      // +1 sweeps detuning upward
    double f_cut = 1e6;      // detector bandwidth for lowpass [Hz]

    void validate() const {
        if (span_fsr <= 0.0) throw ConfigError("span_fsr must be positive");
        if (duration <= 0.0) throw ConfigError("duration must be positive");
        if (direction != 1 && direction != -1)
            throw ConfigError("direction must be +1 or -1");
    }
};

/// Uniformly sampled time series with a linear detuning ramp attached.
struct SweptTrace {
    double dt = 0.0;          // sample spacing [s]
    double delta0 = 0.0;      // detuning at the first sample [rad/s]
    double delta_rate = 0.0;  // [rad/s per s]
    std::vector<double> power;

    double delta_at(size_t i) const { return delta0 + delta_rate * dt * i; }
};

struct FinessePoint {
    double P_in = 0.0;
    double finesse_A = 0.0;
    double R_eff = 0.0;
    double residual = 0.0;
    bool ok = false;
};

/// Reflected power recorded while the laser is swept across the resonance,
/// starting from a cavity equilibrated well off resonance.
inline SweptTrace dynamic_sweep(const CavityFiberConfig& cfg, double P_in,
                                const SweepSpec& sweep) {
    sweep.validate();
    const auto derived = derive_cavity(cfg);
    const double fsr_w = 2.0 * phys::pi * derived.fsr;

    DriveSpec drive;
    drive.P_in = P_in;
    drive.Delta0 = -sweep.direction * 0.5 * sweep.span_fsr * fsr_w;
    drive.Delta_rate = sweep.direction * sweep.span_fsr * fsr_w / sweep.duration;

    Propagator prop(cfg, drive);
    {
        // equilibrate at the start detuning with the ramp frozen
        DriveSpec hold = drive;
        hold.Delta_rate = 0.0;
        Propagator settle(cfg, hold);
        auto eq = settle.run_to_equilibrium();
        prop.lattice() = settle.lattice();
        prop.lattice().t = 0.0;
        (void)eq;
    }

    SweptTrace trace;
    trace.dt = prop.dt();
    trace.delta0 = drive.Delta0;
    trace.delta_rate = drive.Delta_rate;
    const long n_steps = static_cast<long>(std::llround(sweep.duration / prop.dt()));
    trace.power.resize(n_steps);
    for (long i = 0; i < n_steps; ++i) {
        prop.step();
        trace.power[i] = prop.reflected_power();
    }
    return trace;
}

/// First-order lowpass applied in the frequency domain (detector response).
inline std::vector<double> lowpass(const std::vector<double>& series, double f_cut,
                                   double dt) {
    if (series.empty()) return {};
    if (f_cut <= 0.0) throw ConfigError("f_cut must be positive");
    if (!std::isfinite(f_cut)) return series;
    const size_t n = series.size();

    static std::mutex plan_mutex;  // FFTW planning is not thread safe
    std::vector<double> out(n);
    std::vector<double> in(series);
    const size_t nc = n / 2 + 1;
    fftw_complex* spec = fftw_alloc_complex(nc);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (size_t k = 0; k < nc; ++k) {
        const double f = static_cast<double>(k) / (n * dt);
        const double u = f / f_cut;
        // H = 1 / (1 + i u)
        const double re = 1.0 / (1.0 + u * u);
        const double im = -u / (1.0 + u * u);
        const double sr = spec[k][0], si = spec[k][1];
        spec[k][0] = sr * re - si * im;
        spec[k][1] = sr * im + si * re;
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(spec);
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

namespace detail {

/// Cut one resonance dip (the one nearest the trace midpoint) out of a
/// swept trace: window of +-1.5 linewidths around the minimum, decimated
/// for fitting.
struct DipWindow {
    std::vector<double> delta;
    std::vector<double> power;
    bool ok = false;
};

inline DipWindow extract_dip(const SweptTrace& trace, double fsr_w) {
    DipWindow win;
    const size_t n = trace.power.size();
    if (n < 100) return win;

    // candidate minima: global minimum within the central FSR of the ramp
    size_t imin = 0;
    double best = 1e300;
    for (size_t i = 0; i < n; ++i) {
        const double frac =
            std::abs(trace.delta_at(i)) / (0.5 * std::abs(trace.delta_rate) *
                                           trace.dt * static_cast<double>(n));
        (void)frac;
        if (trace.power[i] < best) {
            best = trace.power[i];
            imin = i;
        }
    }

    // linewidth estimate from the half-depth crossings
    double base = 0.0;
    {
        std::vector<double> copy(trace.power);
        std::nth_element(copy.begin(), copy.begin() + 9 * copy.size() / 10, copy.end());
        base = copy[9 * copy.size() / 10];
    }
    const double half = 0.5 * (base + best);
    size_t lo = imin, hi = imin;
    while (lo > 0 && trace.power[lo] < half) --lo;
    while (hi + 1 < n && trace.power[hi] < half) ++hi;
    const size_t fwhm = hi > lo ? hi - lo : 1;

    const size_t w = 3 * fwhm / 2;
    const size_t a = imin > w ? imin - w : 0;
    const size_t b = std::min(n - 1, imin + w);
    if (b - a < 32) return win;

    const size_t target_points = 2000;
    const size_t stride = std::max<size_t>(1, (b - a) / target_points);
    for (size_t i = a; i <= b; i += stride) {
        win.delta.push_back(trace.delta_at(i));
        win.power.push_back(trace.power[i]);
    }
    win.ok = true;
    (void)fsr_w;
    return win;
}

} // namespace detail

/// Sweep, filter, cut the dip and fit the Airy reflection.
inline FinessePoint finesse_from_sweep(const CavityFiberConfig& cfg, double P_in,
                                       const SweepSpec& sweep) {
    FinessePoint pt;
    pt.P_in = P_in;
    const auto derived = derive_cavity(cfg);
    auto trace = dynamic_sweep(cfg, P_in, sweep);
    trace.power = lowpass(trace.power, sweep.f_cut, trace.dt);
    const auto win = detail::extract_dip(trace, 2.0 * phys::pi * derived.fsr);
    if (!win.ok) return pt;
    const auto fit =
        fit_airy(win.delta, win.power, cfg.R1, derived.round_trip_time);
    pt.finesse_A = fit.finesse_A;
    pt.R_eff = fit.R_eff;
    pt.residual = fit.residual;
    pt.ok = fit.ok;
    return pt;
}

/// The finesse-vs-power pipeline; power points run in parallel.
inline std::vector<FinessePoint> finesse_vs_power(const CavityFiberConfig& cfg,
                                                  const std::vector<double>& powers,
                                                  const SweepSpec& sweep = {},
                                                  int jobs = 0) {
    std::vector<FinessePoint> out(powers.size());
    parallel_for(
        static_cast<long>(powers.size()),
        [&](long i) { out[i] = finesse_from_sweep(cfg, powers[i], sweep); }, jobs);
    return out;
}

struct SpectrumPoint {
    double Delta = 0.0;   // [rad/s]
    double P_refl = 0.0;  // [W]
    bool converged = false;
};

/// True equilibrium reflection spectrum: each detuning integrated from a
/// fresh empty cavity.
inline std::vector<SpectrumPoint> equilibrium_spectrum(
    const CavityFiberConfig& cfg, double P_in, const std::vector<double>& detunings,
    const EquilibriumOptions& opt = {}, int jobs = 0) {
    std::vector<SpectrumPoint> out(detunings.size());
    parallel_for(
        static_cast<long>(detunings.size()),
        [&](long i) {
            DriveSpec drive;
            drive.P_in = P_in;
            drive.Delta0 = detunings[i];
            const auto res = run_to_equilibrium(cfg, drive, opt);
            out[i] = {detunings[i], res.P_reflected, res.converged};
        },
        jobs);
    return out;
}

} // namespace sbscav

#endif
