#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lumen/errors.hpp"
#include "lumen/schedule.hpp"
#include "lumen/score.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Reflectance-aware trajectory refinement
//
//  Retinex reading of the low-light condition y = h * x + z: the
//  illumination map is the per-pixel channel maximum, the noise map is
//  the distance to a non-learned denoised copy, and the latent clean
//  image x_tilde0 = (y - z') / h' anchors the refined teacher target.
// =====================================================================

// Lower bound on the illumination map; keeps (y - z')/h' bounded on
// near-black pixels.
inline constexpr double kIlluminationFloor = 0.05;

struct RetinexDecomposition {
    Tensor illumination;  // h', single channel, >= floor
    Tensor noise_map;     // z', >= 0
    Tensor latent_clean;  // x_tilde0, clamped to [0,1]
};

// Per-pixel max over channels, lower-clamped to the illumination floor.
inline Tensor illumination_map(const Tensor& y,
                               double floor = kIlluminationFloor) {
    if (y.empty() || y.channels() < 1) {
        throw shape_error("illumination_map: empty image");
    }
    Tensor h(1, y.height(), y.width());
    for (int row = 0; row < y.height(); ++row) {
        for (int col = 0; col < y.width(); ++col) {
            double m = y.at(0, row, col);
            for (int c = 1; c < y.channels(); ++c) {
                m = std::max(m, y.at(c, row, col));
            }
            h.at(0, row, col) = std::max(m, floor);
        }
    }
    return h;
}

// The non-learned denoiser psi: per-channel 3x3 median with replicated
// edges. A swap point; anything non-learned with the same signature fits.
inline Tensor denoise(const Tensor& y) {
    Tensor out = Tensor::zeros_like(y);
    const int h = y.height();
    const int w = y.width();
    for (int c = 0; c < y.channels(); ++c) {
        for (int row = 0; row < h; ++row) {
            for (int col = 0; col < w; ++col) {
                std::array<double, 9> window;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = std::clamp(row + dy, 0, h - 1);
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = std::clamp(col + dx, 0, w - 1);
                        window[n++] = y.at(c, yy, xx);
                    }
                }
                std::nth_element(window.begin(), window.begin() + 4,
                                 window.end());
                out.at(c, row, col) = window[4];
            }
        }
    }
    return out;
}

// z' = |y - psi(y)|
inline Tensor noise_map(const Tensor& y) {
    const Tensor den = denoise(y);
    Tensor z = Tensor::zeros_like(y);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = std::abs(y[i] - den[i]);
    }
    return z;
}

// Full decomposition; the latent clean image broadcasts h' over channels
// and is clamped to [0,1] before use as a trajectory anchor.
inline RetinexDecomposition latent_clean(const Tensor& y) {
    RetinexDecomposition d;
    d.illumination = illumination_map(y);
    d.noise_map = noise_map(y);
    d.latent_clean = Tensor::zeros_like(y);
    for (int c = 0; c < y.channels(); ++c) {
        for (int row = 0; row < y.height(); ++row) {
            for (int col = 0; col < y.width(); ++col) {
                const double v = (y.at(c, row, col) - d.noise_map.at(c, row, col)) /
                                 d.illumination.at(0, row, col);
                d.latent_clean.at(c, row, col) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return d;
}

// Residual-shifted noise, eps_tilde = (x_t - a_t * x_tilde0) / sigma_t.
// Degrades to the true eps exactly when x_tilde0 equals the clean image.
inline Tensor residual_noise(const Tensor& x_t, const Tensor& x_tilde0, int t,
                             const NoiseSchedule& sched) {
    x_t.require_same_shape(x_tilde0, "residual_noise");
    sched.check_step(t);
    if (t == 0) {
        throw parameter_error("residual_noise: singular step t=0 (sigma_0 = 0)");
    }
    const double a_t = sched.a_at(t);
    const double sig_t = sched.sigma_at(t);
    return axpby(1.0 / sig_t, x_t, -a_t / sig_t, x_tilde0);
}

// Refinement anchor x_tilde_s = a_s * x_tilde0 + sigma_s * eps(x_u, y, u).
inline Tensor refinement_anchor(const ScoreFunction& score, const Tensor& x_u,
                                const Tensor& y, int u, int s,
                                const Tensor& x_tilde0,
                                const NoiseSchedule& sched) {
    sched.check_step(u);
    sched.check_step(s);
    x_u.require_same_shape(x_tilde0, "refinement_anchor");
    const Tensor eps = score(x_u, y, u);
    return axpby(sched.a_at(s), x_tilde0, sched.sigma_at(s), eps);
}

}  // namespace lumen
