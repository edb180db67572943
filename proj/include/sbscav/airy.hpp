#ifndef SBSCAV_AIRY_HPP
#define SBSCAV_AIRY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "sbscav/cavity.hpp"
#include "sbscav/types.hpp"

namespace sbscav {

/// Reflected-power fraction of a two-mirror cavity with input power
/// reflectivity R1 and effective back reflectance R_eff, at round-trip
/// phase delta.
inline double airy_reflection_fraction(double R1, double R_eff, double delta) {
    const double s1 = std::sqrt(R1);
    const std::complex<double> ph = std::polar(1.0, delta);
    const std::complex<double> r = (-s1 + std::sqrt(R_eff) * ph) /
                                   (1.0 - s1 * std::sqrt(R_eff) * ph);
    return std::norm(r);
}

struct AiryFit {
    double R_eff = 0.0;     // effective back-mirror power reflectance
    double finesse_A = 0.0; // Airy finesse from sqrt(R1 R_eff)
    double center = 0.0;    // dip center [rad/s detuning]
    double scale = 1.0;
    double offset = 0.0;
    double residual = 0.0;  // SSR / n_points
    bool ok = false;
};

namespace detail {

/// Plain Levenberg-Marquardt with a numeric Jacobian on a 4-parameter
/// model; R_eff is clamped into (0,1) between steps.
class AiryModel {
public:
    AiryModel(std::span<const double> delta, std::span<const double> power,
              double R1, double t_rt)
        : delta_(delta), power_(power), R1_(R1), t_rt_(t_rt) {}

    double eval(const double* th, double d) const {
        return th[2] * airy_reflection_fraction(R1_, th[0], (d - th[1]) * t_rt_) + th[3];
    }

    double ssr(const double* th) const {
        double acc = 0.0;
        for (size_t i = 0; i < delta_.size(); ++i) {
            const double r = power_[i] - eval(th, delta_[i]);
            acc += r * r;
        }
        return acc;
    }

    size_t n() const { return delta_.size(); }
    double x(size_t i) const { return delta_[i]; }
    double y(size_t i) const { return power_[i]; }

private:
    std::span<const double> delta_;
    std::span<const double> power_;
    double R1_, t_rt_;
};

inline bool solve4(double a[4][4], double b[4]) {
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-300) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = 0; r < 4; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int c = 0; c < 4; ++c) b[c] /= a[c][c];
    return true;
}

} // namespace detail

/// Least-squares fit of the reflection Airy function to (detuning, power)
/// samples.  Free parameters: R_eff, dip center, vertical scale and offset;
/// R1 and the round-trip time come from the cavity.
inline AiryFit fit_airy(std::span<const double> delta, std::span<const double> power,
                        double R1, double t_rt) {
    AiryFit out;
    if (delta.size() < 8 || delta.size() != power.size()) return out;
    detail::AiryModel model(delta, power, R1, t_rt);

    // initial guess: dip at the sample minimum, scale from the baseline
    size_t imin = 0;
    double ymin = power[0], ymax = power[0];
    for (size_t i = 1; i < power.size(); ++i) {
        if (power[i] < ymin) {
            ymin = power[i];
            imin = i;
        }
        ymax = std::max(ymax, power[i]);
    }
    double th[4] = {0.7, delta[imin], ymax > 0 ? ymax : 1.0, 0.0};

    double lambda = 1e-3;
    double ssr = model.ssr(th);
    const size_t n = model.n();
    for (int iter = 0; iter < 200; ++iter) {
        // numeric Jacobian, normal equations
        double jtj[4][4] = {};
        double jtr[4] = {};
        double step[4];
        for (int p = 0; p < 4; ++p)
            step[p] = std::max(1e-9, 1e-6 * std::abs(th[p]));
        for (size_t i = 0; i < n; ++i) {
            double grad[4];
            const double f0 = model.eval(th, model.x(i));
            for (int p = 0; p < 4; ++p) {
                double tp[4] = {th[0], th[1], th[2], th[3]};
                tp[p] += step[p];
                if (p == 0) tp[0] = std::clamp(tp[0], 1e-9, 1.0 - 1e-9);
                grad[p] = (model.eval(tp, model.x(i)) - f0) / (tp[p] - th[p]);
            }
            const double r = model.y(i) - f0;
            for (int p = 0; p < 4; ++p) {
                jtr[p] += grad[p] * r;
                for (int q = 0; q < 4; ++q) jtj[p][q] += grad[p] * grad[q];
            }
        }
        double a[4][4];
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q)
                a[p][q] = jtj[p][q] + (p == q ? lambda * jtj[p][p] : 0.0);
        double d[4] = {jtr[0], jtr[1], jtr[2], jtr[3]};
        if (!detail::solve4(a, d)) break;
        double trial[4] = {std::clamp(th[0] + d[0], 1e-9, 1.0 - 1e-9), th[1] + d[1],
                           th[2] + d[2], th[3] + d[3]};
        const double trial_ssr = model.ssr(trial);
        if (trial_ssr < ssr) {
            const double rel = (ssr - trial_ssr) / std::max(ssr, 1e-300);
            std::copy(trial, trial + 4, th);
            ssr = trial_ssr;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel < 1e-12) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    out.R_eff = th[0];
    out.center = th[1];
    out.scale = th[2];
    out.offset = th[3];
    out.residual = ssr / n;
    const double r_rt = std::sqrt(R1 * th[0]);
    out.finesse_A = airy_finesse_from_amplitude(r_rt);
    out.ok = th[0] > 1e-6 && th[0] < 1.0 - 1e-6 && std::isfinite(out.finesse_A) &&
             out.scale > 0.0;
    return out;
}

} // namespace sbscav

#endif
