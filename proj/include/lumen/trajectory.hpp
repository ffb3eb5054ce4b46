#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"
#include "lumen/schedule.hpp"
#include "lumen/score.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Trajectory algebra
//
//  Deterministic jumps between schedule steps implied by one score
//  evaluation, their second-order composition, the omega-refined blend,
//  and clean-image extraction. All linear identities; clamping happens
//  only at sampler exit.
// =====================================================================

// Distillation step indices with 0 <= s <= u < t <= T.
struct TimeTriple {
    int t = 0;
    int u = 0;
    int s = 0;

    void validate(const NoiseSchedule& sched) const {
        if (s < 0 || t > sched.T || s > u || u >= t) {
            throw ordering_error("time triple (t=" + std::to_string(t) +
                                 ", u=" + std::to_string(u) +
                                 ", s=" + std::to_string(s) +
                                 ") violates 0 <= s <= u < t <= T");
        }
    }
};

// x_t = a_t * x0 + sigma_t * eps
inline Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps,
                              const NoiseSchedule& sched) {
    x0.require_same_shape(eps, "forward_diffuse");
    sched.check_step(t);
    return axpby(sched.a_at(t), x0, sched.sigma_at(t), eps);
}

// Trajectory decoder: one deterministic jump from step t to step s,
//   G(x_t, y, t, s) = (a_s/a_t) x_t + (sigma_s - (a_s/a_t) sigma_t) eps(x_t, y, t).
// s == t is the documented boundary and returns x_t unchanged.
inline Tensor decode(const ScoreFunction& score, const Tensor& x_t,
                     const Tensor& y, int t, int s, const NoiseSchedule& sched) {
    sched.check_step(t);
    sched.check_step(s);
    if (s > t) {
        throw ordering_error("decode requires s <= t, got t=" + std::to_string(t) +
                             ", s=" + std::to_string(s));
    }
    if (s == t) {
        return x_t;
    }
    const double ratio = sched.a_at(s) / sched.a_at(t);
    const Tensor eps = score(x_t, y, t);
    return axpby(ratio, x_t, sched.sigma_at(s) - ratio * sched.sigma_at(t), eps);
}

// Second-order trajectory: two chained decoder jumps t -> u -> s.
inline Tensor teacher_second_order(const ScoreFunction& score, const Tensor& x_t,
                                   const Tensor& y, const TimeTriple& triple,
                                   const NoiseSchedule& sched) {
    triple.validate(sched);
    const Tensor x_u = decode(score, x_t, y, triple.t, triple.u, sched);
    return decode(score, x_u, y, triple.u, triple.s, sched);
}

// Convex blend of the second-order trajectory with a refinement anchor:
//   omega * x_second + (1 - omega) * x_anchor, omega in (0, 1].
inline Tensor refine(const Tensor& x_second, const Tensor& x_anchor,
                     double omega) {
    if (!(omega > 0.0) || omega > 1.0) {
        throw parameter_error("omega must lie in (0, 1], got " +
                              std::to_string(omega));
    }
    x_second.require_same_shape(x_anchor, "refine");
    return axpby(omega, x_second, 1.0 - omega, x_anchor);
}

// Literal four-term form of the refined trajectory. Exists to
// cross-validate refine(): both routes must agree to round-off for any
// eps_tilde when the anchor is built from the matching latent clean
// image (x_tilde0 = (x_t - sigma_t * eps_tilde) / a_t).
inline Tensor refined_direct(const ScoreFunction& score, const Tensor& x_t,
                             const Tensor& y, const TimeTriple& triple,
                             const Tensor& eps_tilde, double omega,
                             const NoiseSchedule& sched) {
    triple.validate(sched);
    if (!(omega > 0.0) || omega > 1.0) {
        throw parameter_error("omega must lie in (0, 1], got " +
                              std::to_string(omega));
    }
    x_t.require_same_shape(eps_tilde, "refined_direct");

    const double a_t = sched.a_at(triple.t);
    const double a_u = sched.a_at(triple.u);
    const double a_s = sched.a_at(triple.s);
    const double sig_t = sched.sigma_at(triple.t);
    const double sig_u = sched.sigma_at(triple.u);
    const double sig_s = sched.sigma_at(triple.s);

    const Tensor eps_t = score(x_t, y, triple.t);
    const Tensor x_u = axpby(a_u / a_t, x_t, sig_u - (a_u / a_t) * sig_t, eps_t);
    const Tensor eps_u = score(x_u, y, triple.u);

    Tensor out = Tensor::zeros_like(x_t);
    const double c_xt = a_s / a_t;
    const double c_mix = omega * (a_s / a_u) * sig_u;
    const double c_last = (a_s / a_t) * sig_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c_xt * x_t[i] + sig_s * eps_u[i] +
                 c_mix * (eps_t[i] - eps_u[i]) -
                 c_last * (omega * eps_t[i] + (1.0 - omega) * eps_tilde[i]);
    }
    return out;
}

// Clean-image estimate implied by a t -> s transition:
//   x = (x_traj - (sigma_s/sigma_t) x_t) / (a_s - (sigma_s/sigma_t) a_t)
inline Tensor extract_clean(const Tensor& x_traj, const Tensor& x_t, int t,
                            int s, const NoiseSchedule& sched) {
    x_traj.require_same_shape(x_t, "extract_clean");
    sched.check_step(t);
    sched.check_step(s);
    if (s >= t) {
        throw ordering_error("extract_clean requires s < t, got t=" +
                             std::to_string(t) + ", s=" + std::to_string(s));
    }
    const double ratio = sched.sigma_at(s) / sched.sigma_at(t);
    const double denom = sched.a_at(s) - ratio * sched.a_at(t);
    if (std::abs(denom) <= 1e-9) {
        throw degenerate_pair_error(
            "extract_clean: near-singular coefficient pair (t=" +
            std::to_string(t) + ", s=" + std::to_string(s) + ")");
    }
    return axpby(1.0 / denom, x_traj, -ratio / denom, x_t);
}

// Literal ancestral variance from the reverse-process definition,
// sigma_hat_t^2 = 1 - alpha_bar_t^2. Distinct from the variance-
// preserving sigma_t^2 = 1 - alpha_bar_t used everywhere else; kept as a
// separate quantity for the ancestral sampler.
inline double ancestral_variance(const NoiseSchedule& sched, int t) {
    sched.check_step(t);
    const double ab = sched.alpha_bar_at(t);
    return 1.0 - ab * ab;
}

// =====================================================================
//  Multi-step samplers
// =====================================================================

enum class SampleMode { deterministic, ancestral };

struct SampleOptions {
    int steps = 16;
    SampleMode mode = SampleMode::deterministic;
    std::uint64_t seed = 0;
    // Called with (index, step, latent) for the initial noise and after
    // every jump; used by the CLI trace flag to dump latents as images.
    std::function<void(int, int, const Tensor&)> trace;
};

// Uniformly spaced grid over [T, 0] with K transitions, endpoints included.
inline std::vector<int> sample_grid(int T, int K) {
    if (K < 1 || K > T) {
        throw parameter_error("steps must lie in [1, T], got " +
                              std::to_string(K));
    }
    std::vector<int> grid(K + 1);
    for (int i = 0; i <= K; ++i) {
        grid[i] = static_cast<int>(
            std::lround(static_cast<double>(T) * (K - i) / K));
    }
    return grid;
}

// Walks the K-step grid from seeded unit Gaussian noise down to the
// step-0 estimate, clamped to [0,1] at output only.
inline Tensor sample(const ScoreFunction& score, const Tensor& y,
                     const NoiseSchedule& sched, const SampleOptions& opt) {
    const std::vector<int> grid = sample_grid(sched.T, opt.steps);
    Rng rng = Rng::substream(opt.seed, "noise");

    Tensor x = Tensor::gaussian(y.shape(), rng);
    if (opt.trace) opt.trace(0, grid[0], x);

    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const int t = grid[i];
        const int s = grid[i + 1];
        if (t == s) continue;
        if (opt.mode == SampleMode::deterministic) {
            x = decode(score, x, y, t, s, sched);
        } else {
            const Tensor eps = score(x, y, t);
            const double a_t = sched.a_at(t);
            const double sig_t = sched.sigma_at(t);
            Tensor x0_hat = axpby(1.0 / a_t, x, -sig_t / a_t, eps);
            const double noise_std = std::sqrt(ancestral_variance(sched, s));
            x = std::move(x0_hat);
            x *= sched.a_at(s);
            if (noise_std > 0.0) {
                for (std::size_t j = 0; j < x.size(); ++j) {
                    x[j] += noise_std * rng.gaussian();
                }
            }
        }
        if (opt.trace) opt.trace(static_cast<int>(i) + 1, s, x);
    }
    return x.clamped(0.0, 1.0);
}

}  // namespace lumen
