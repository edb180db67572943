#ifndef SBSCAV_LANGEVIN_HPP
#define SBSCAV_LANGEVIN_HPP

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <vector>

#include "sbscav/lattice.hpp"
#include "sbscav/parallel.hpp"
#include "sbscav/types.hpp"

namespace sbscav {

struct LangevinOptions {
    double t_total = 0.6;        // simulated time per realization [s]
    double skip_fraction = 1.0 / 3.0;  // discarded leading fraction
    int realizations = 50;
    std::uint64_t seed = 20240901;
    int mech_stride = 16;        // oscillator substeps per update
    int refinement = 1;
    bool radiation_pressure = true;
    double free_dt = 0.0;        // time step for cavity-free runs (0 = Omega/256)
    bool want_spectrum = false;
    int spectrum_points = 2048;
};

struct LangevinResult {
    double mean_x2 = 0.0;        // [m^2]
    double stderr_x2 = 0.0;      // standard error over realizations [m^2]
    double mean_dx2 = 0.0;       // velocity second moment [m^2/s^2]
    int n_realizations = 0;
    double sim_time = 0.0;       // per realization [s]
    bool lasing = false;         // any realization exceeded the amplitude guard
    std::vector<double> psd_freq;  // [Hz]
    std::vector<double> psd;       // [m^2/Hz]
    std::vector<double> x2_per_realization;
};

namespace detail {

/// One stochastic trajectory with the Mannella leapfrog; the optional
/// cavity is advanced `stride` lattice steps per oscillator update with the
/// mirror held at the half-step position.
struct TrajectoryStats {
    double sum_x2 = 0.0;
    double sum_v2 = 0.0;
    long n = 0;
    bool lasing = false;
    std::vector<double> decimated_x;
};

inline TrajectoryStats langevin_trajectory(const CavityFiberConfig& cfg,
                                           const MechOscillator& mech,
                                           double Delta, double P_in,
                                           const LangevinOptions& opt,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double kT = phys::k_boltzmann * mech.T_bath;
    const double x_rms = mech.thermal_rms();
    const double guard = 1e3 * x_rms;

    Propagator* prop = nullptr;
    Propagator prop_storage = [&] {
        DriveSpec drive;
        drive.P_in = P_in;
        drive.Delta0 = Delta;
        return Propagator(cfg, drive, opt.refinement);
    }();
    double h;
    int stride = 1;
    if (opt.radiation_pressure) {
        prop = &prop_storage;
        prop->run_to_equilibrium({1e-8, 2e-4, 20'000'000, 64});
        stride = opt.mech_stride;
        h = stride * prop->dt();
    } else {
        h = opt.free_dt > 0.0 ? opt.free_dt
                              : 2.0 * phys::pi / mech.Omega_m / 256.0;
    }

    // thermal initial conditions
    double x = x_rms * normal(rng);
    double v = std::sqrt(kT / mech.mass) * normal(rng);

    const double gamma = mech.Gamma_m;
    const double c1 = 1.0 - 0.5 * gamma * h;
    const double c2 = 1.0 / (1.0 + 0.5 * gamma * h);
    const double sigma = std::sqrt(2.0 * gamma * kT / mech.mass);
    const double w2 = mech.Omega_m * mech.Omega_m;
    const double inv_m = 1.0 / mech.mass;
    const double noise_scale = sigma * std::sqrt(h);

    const long n_updates = static_cast<long>(std::llround(opt.t_total / h));
    const long skip = static_cast<long>(n_updates * opt.skip_fraction);
    const long decim = std::max<long>(1, static_cast<long>(
        std::llround(2.0 * phys::pi / mech.Omega_m / 64.0 / h)));

    TrajectoryStats st;
    if (opt.want_spectrum) st.decimated_x.reserve((n_updates - skip) / decim + 1);

    for (long i = 0; i < n_updates; ++i) {
        const double x_half = x + 0.5 * h * v;
        double f_rad = 0.0;
        if (prop) {
            double acc = 0.0;
            for (int k = 0; k < stride; ++k) {
                prop->step(x_half);
                acc += prop->force().total;
            }
            f_rad = -acc / stride;  // oscillator convention: +x shortens
        }
        const double force = -w2 * x_half + f_rad * inv_m;
        v = c2 * (c1 * v + h * force + noise_scale * normal(rng));
        x = x_half + 0.5 * h * v;

        if (std::abs(x) > guard) st.lasing = true;
        if (i >= skip) {
            st.sum_x2 += x * x;
            st.sum_v2 += v * v;
            ++st.n;
            if (opt.want_spectrum && (i - skip) % decim == 0)
                st.decimated_x.push_back(x);
        }
    }
    return st;
}

/// Averaged periodogram (Hann window) of equally spaced samples.
inline void periodogram(const std::vector<std::vector<double>>& traces, double dt,
                        int n_points, std::vector<double>& freq,
                        std::vector<double>& psd) {
    freq.clear();
    psd.clear();
    size_t seg = 1;
    while (seg * 2 <= static_cast<size_t>(n_points)) seg *= 2;
    for (const auto& tr : traces)
        if (tr.size() < seg) return;

    static std::mutex plan_mutex;
    std::vector<double> in(seg);
    std::vector<double> window(seg);
    double wsum2 = 0.0;
    for (size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * phys::pi * i / (seg - 1)));
        wsum2 += window[i] * window[i];
    }
    const size_t nc = seg / 2 + 1;
    fftw_complex* spec = fftw_alloc_complex(nc);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(seg), in.data(), spec,
                                    FFTW_ESTIMATE);
    }
    psd.assign(nc, 0.0);
    long n_segments = 0;
    for (const auto& tr : traces) {
        for (size_t start = 0; start + seg <= tr.size(); start += seg / 2) {
            for (size_t i = 0; i < seg; ++i) in[i] = tr[start + i] * window[i];
            fftw_execute(plan);
            for (size_t k = 0; k < nc; ++k)
                psd[k] += (spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1]);
            ++n_segments;
        }
    }
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }
    fftw_free(spec);
    if (n_segments == 0) return;
    freq.resize(nc);
    for (size_t k = 0; k < nc; ++k) {
        freq[k] = static_cast<double>(k) / (seg * dt);
        psd[k] *= 2.0 * dt / (wsum2 * n_segments);  // one-sided
    }
}

} // namespace detail

/// Fully coupled stochastic run: cavity fields, radiation pressure and a
/// thermally driven oscillator; averaged over noise realizations.
inline LangevinResult langevin_run(const CavityFiberConfig& cfg,
                                   const MechOscillator& mech, double Delta,
                                   double P_in, const LangevinOptions& opt = {},
                                   int jobs = 0) {
    mech.validate();
    if (mech.Gamma_m <= 0.0) throw ConfigError("langevin_run needs a finite Q");
    LangevinResult res;
    res.n_realizations = opt.realizations;

    std::vector<detail::TrajectoryStats> stats(opt.realizations);
    parallel_for(
        opt.realizations,
        [&](long i) {
            stats[i] = detail::langevin_trajectory(
                cfg, mech, Delta, P_in, opt,
                opt.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1));
        },
        jobs);

    double m1 = 0.0, m2 = 0.0;
    for (const auto& st : stats) {
        const double x2 = st.sum_x2 / std::max<long>(1, st.n);
        res.x2_per_realization.push_back(x2);
        m1 += x2;
        m2 += x2 * x2;
        res.mean_dx2 += st.sum_v2 / std::max<long>(1, st.n) / opt.realizations;
        res.lasing = res.lasing || st.lasing;
        res.sim_time = opt.t_total;
    }
    m1 /= opt.realizations;
    m2 /= opt.realizations;
    res.mean_x2 = m1;
    if (opt.realizations > 1)
        res.stderr_x2 = std::sqrt(std::max(0.0, m2 - m1 * m1) /
                                  (opt.realizations - 1));

    if (opt.want_spectrum) {
        std::vector<std::vector<double>> traces;
        for (auto& st : stats) traces.push_back(std::move(st.decimated_x));
        double h = opt.radiation_pressure
                       ? opt.mech_stride * (cfg.L_free / opt.refinement) / phys::c0
                       : (opt.free_dt > 0.0 ? opt.free_dt
                                            : 2.0 * phys::pi / mech.Omega_m / 256.0);
        const long decim = std::max<long>(
            1, static_cast<long>(std::llround(2.0 * phys::pi / mech.Omega_m / 64.0 / h)));
        detail::periodogram(traces, h * decim, opt.spectrum_points, res.psd_freq, res.psd);
    }
    return res;
}

} // namespace sbscav

#endif
