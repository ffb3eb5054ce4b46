#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lumen/errors.hpp"

namespace lumen {

// =====================================================================
//  Discrete noise schedule
//
//  Variance-preserving convention throughout: a_t = sqrt(alpha_bar_t),
//  sigma_t = sqrt(1 - alpha_bar_t), so a_t^2 + sigma_t^2 = 1 at every
//  step. Timesteps are 1-indexed; t = 0 is the clean-data boundary with
//  a_0 = 1, sigma_0 = 0. Immutable after construction.
// =====================================================================

struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;       // per-step variances, beta[t-1]
    std::vector<double> alpha_bar;  // cumulative products, alpha_bar[t-1]
    std::vector<double> a;          // signal coefficient sqrt(alpha_bar)
    std::vector<double> sigma;      // noise coefficient sqrt(1 - alpha_bar)

    // Accessors take grid steps in [0, T]; t = 0 is the data boundary.
    double a_at(int t) const {
        check_step(t);
        return t == 0 ? 1.0 : a[t - 1];
    }

    double sigma_at(int t) const {
        check_step(t);
        return t == 0 ? 0.0 : sigma[t - 1];
    }

    double alpha_bar_at(int t) const {
        check_step(t);
        return t == 0 ? 1.0 : alpha_bar[t - 1];
    }

    double beta_at(int t) const {
        if (t < 1 || t > T) {
            throw index_error("beta_at: step " + std::to_string(t) +
                              " outside [1, " + std::to_string(T) + "]");
        }
        return beta[t - 1];
    }

    void check_step(int t) const {
        if (t < 0 || t > T) {
            throw index_error("step " + std::to_string(t) + " outside [0, " +
                              std::to_string(T) + "]");
        }
    }
};

inline NoiseSchedule linear_beta_schedule(int T, double beta_start,
                                          double beta_end) {
    if (T < 2) {
        throw parameter_error("T must be >= 2, got " + std::to_string(T));
    }
    if (!(beta_start > 0.0)) {
        throw parameter_error("beta_start must be > 0, got " +
                              std::to_string(beta_start));
    }
    if (!(beta_end < 1.0)) {
        throw parameter_error("beta_end must be < 1, got " +
                              std::to_string(beta_end));
    }
    if (!(beta_start <= beta_end)) {
        throw parameter_error("beta_start must be <= beta_end");
    }

    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha_bar.resize(T);
    s.a.resize(T);
    s.sigma.resize(T);

    double cumulative = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = static_cast<double>(t - 1) / static_cast<double>(T - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        cumulative *= 1.0 - b;
        s.beta[t - 1] = b;
        s.alpha_bar[t - 1] = cumulative;
        s.a[t - 1] = std::sqrt(cumulative);
        s.sigma[t - 1] = std::sqrt(1.0 - cumulative);
    }
    return s;
}

// lambda(t) = max(1, a_t^2 / sigma_t^2); non-increasing in t, bounded
// below by 1.
inline double adaptive_weight(const NoiseSchedule& sched, int t) {
    if (t < 1 || t > sched.T) {
        throw index_error("adaptive_weight: step " + std::to_string(t) +
                          " outside [1, " + std::to_string(sched.T) + "]");
    }
    const double a2 = sched.alpha_bar[t - 1];
    const double s2 = 1.0 - a2;
    return std::max(1.0, a2 / s2);
}

}  // namespace lumen
