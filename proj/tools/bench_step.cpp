// Micro-benchmark of the propagator time step, used to size long runs.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "sbscav/lattice.hpp"

int main(int argc, char** argv) {
    using namespace sbscav;
    const long n_steps = argc > 1 ? std::atol(argv[1]) : 10'000'000;
    const double L_fib = argc > 2 ? std::atof(argv[2]) : 5.0;

    CavityFiberConfig cfg;
    cfg.N_elements = static_cast<int>(std::lround(L_fib * cfg.n_refr / cfg.L_free));
    cfg.L_fib = cfg.L_free * cfg.N_elements / cfg.n_refr;

    DriveSpec drive;
    drive.P_in = 0.060;
    drive.x_amp = 1e-10;
    drive.Omega_x = 2.0 * phys::pi * 20e3;

    Propagator prop(cfg, drive);
    const auto t0 = std::chrono::steady_clock::now();
    prop.run(n_steps);
    const auto t1 = std::chrono::steady_clock::now();
    const double sec = std::chrono::duration<double>(t1 - t0).count();
    std::printf("fiber %.3f m (%d elements), %ld steps in %.3f s -> %.1f ns/step\n",
                cfg.L_fib, cfg.N_elements, n_steps, sec, 1e9 * sec / n_steps);
    std::printf("simulated %.3f ms, pump %.6g W stokes %.6g W refl %.6g W\n",
                1e3 * prop.time(), prop.pump_circ_power(), prop.stokes_circ_power(),
                prop.reflected_power());
    return 0;
}
