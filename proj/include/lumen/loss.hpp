#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"
#include "lumen/schedule.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Training objectives
//
//  All MSE terms use mean reduction so magnitudes are resolution
//  independent. Gradient helpers return dLoss/dEstimate for the training
//  loops; targets are constants by contract (no gradient flows into the
//  teacher side).
// =====================================================================

struct LossWeights {
    double lambda_eps = 1.0;
    double lambda_pix = 1.0;
    double lambda_per = 0.1;
};

inline double eps_loss(const Tensor& eps_true, const Tensor& eps_pred,
                       const LossWeights& w) {
    eps_true.require_same_shape(eps_pred, "eps_loss");
    return w.lambda_eps * mse(eps_true, eps_pred);
}

inline Tensor eps_loss_grad(const Tensor& eps_true, const Tensor& eps_pred,
                            const LossWeights& w) {
    eps_true.require_same_shape(eps_pred, "eps_loss_grad");
    const double scale = w.lambda_eps * 2.0 / static_cast<double>(eps_true.size());
    return axpby(scale, eps_pred, -scale, eps_true);
}

// Adaptive-weighted trajectory matching term. x_target is a constant.
inline double distill_loss(const Tensor& x_target, const Tensor& x_est, int t,
                           const NoiseSchedule& sched) {
    x_target.require_same_shape(x_est, "distill_loss");
    return adaptive_weight(sched, t) * mse(x_target, x_est);
}

inline Tensor distill_loss_grad(const Tensor& x_target, const Tensor& x_est,
                                int t, const NoiseSchedule& sched) {
    x_target.require_same_shape(x_est, "distill_loss_grad");
    const double scale =
        adaptive_weight(sched, t) * 2.0 / static_cast<double>(x_target.size());
    return axpby(scale, x_est, -scale, x_target);
}

inline double pixel_loss(const Tensor& x0, const Tensor& x_est,
                         const LossWeights& w) {
    x0.require_same_shape(x_est, "pixel_loss");
    return w.lambda_pix * mse(x0, x_est);
}

inline Tensor pixel_loss_grad(const Tensor& x0, const Tensor& x_est,
                              const LossWeights& w) {
    x0.require_same_shape(x_est, "pixel_loss_grad");
    const double scale = w.lambda_pix * 2.0 / static_cast<double>(x0.size());
    return axpby(scale, x_est, -scale, x0);
}

// =====================================================================
//  FeatureBank — frozen surrogate feature extractor for the perceptual
//  term: a seeded bank of random square filters applied at two scales
//  (full and 2x2-mean-pooled) with an absolute-value nonlinearity. The
//  identity bank reduces the perceptual loss to pixel MSE and is used in
//  tests. Declared swap point for a pretrained feature network.
// =====================================================================

class FeatureBank {
public:
    static FeatureBank random(std::uint64_t seed, int n_filters = 16,
                              int ksize = 5) {
        if (n_filters < 1 || ksize < 1 || ksize % 2 == 0) {
            throw parameter_error("feature bank needs n_filters >= 1 and odd ksize");
        }
        FeatureBank bank;
        bank.ksize_ = ksize;
        Rng rng = Rng::substream(seed, "feature-bank");
        const double scale = 1.0 / std::sqrt(static_cast<double>(ksize * ksize));
        bank.filters_.resize(n_filters);
        for (auto& f : bank.filters_) {
            f.resize(static_cast<std::size_t>(ksize) * ksize);
            for (auto& v : f) v = rng.uniform(-scale, scale);
        }
        return bank;
    }

    static FeatureBank identity() { return FeatureBank{}; }

    bool is_identity() const { return filters_.empty(); }

    std::vector<double> features(const Tensor& x) const {
        std::vector<double> raw = raw_features(x);
        for (auto& v : raw) v = std::abs(v);
        return raw;
    }

    // dLoss/dx given dLoss/d|features|. Recomputes pre-activation signs.
    Tensor input_gradient(const Tensor& x, const std::vector<double>& dfeat) const {
        if (is_identity()) {
            if (dfeat.size() != x.size()) {
                throw shape_error("identity bank gradient length mismatch");
            }
            Tensor g = Tensor::zeros_like(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] = dfeat[i] * sign(x[i]);
            }
            return g;
        }
        const std::vector<double> raw = raw_features(x);
        if (dfeat.size() != raw.size()) {
            throw shape_error("feature gradient length mismatch");
        }

        Tensor grad = Tensor::zeros_like(x);
        const Tensor half = pool2(x);
        Tensor grad_half = Tensor::zeros_like(half);

        std::size_t cursor = 0;
        scatter_scale(x, grad, dfeat, raw, cursor);
        scatter_scale(half, grad_half, dfeat, raw, cursor);
        unpool2_accumulate(grad, grad_half);
        return grad;
    }

private:
    static double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

    // Pre-activation features: each filter correlated with each channel at
    // both scales, zero-padded to keep map sizes.
    std::vector<double> raw_features(const Tensor& x) const {
        if (is_identity()) {
            return x.flat();
        }
        std::vector<double> out;
        const Tensor half = pool2(x);
        out.reserve(filters_.size() * (x.size() + half.size()));
        conv_scale(x, out);
        conv_scale(half, out);
        return out;
    }

    void conv_scale(const Tensor& x, std::vector<double>& out) const {
        const int r = ksize_ / 2;
        for (const auto& f : filters_) {
            for (int c = 0; c < x.channels(); ++c) {
                for (int row = 0; row < x.height(); ++row) {
                    for (int col = 0; col < x.width(); ++col) {
                        double acc = 0.0;
                        for (int dy = -r; dy <= r; ++dy) {
                            const int yy = row + dy;
                            if (yy < 0 || yy >= x.height()) continue;
                            for (int dx = -r; dx <= r; ++dx) {
                                const int xx = col + dx;
                                if (xx < 0 || xx >= x.width()) continue;
                                acc += f[static_cast<std::size_t>(dy + r) * ksize_ +
                                         (dx + r)] *
                                       x.at(c, yy, xx);
                            }
                        }
                        out.push_back(acc);
                    }
                }
            }
        }
    }

    // Transposed pass of conv_scale for one scale, consuming a slice of
    // dfeat starting at cursor; abs backprop uses the raw signs.
    void scatter_scale(const Tensor& x, Tensor& grad,
                       const std::vector<double>& dfeat,
                       const std::vector<double>& raw, std::size_t& cursor) const {
        const int r = ksize_ / 2;
        for (const auto& f : filters_) {
            for (int c = 0; c < x.channels(); ++c) {
                for (int row = 0; row < x.height(); ++row) {
                    for (int col = 0; col < x.width(); ++col) {
                        const double d = dfeat[cursor] * sign(raw[cursor]);
                        ++cursor;
                        if (d == 0.0) continue;
                        for (int dy = -r; dy <= r; ++dy) {
                            const int yy = row + dy;
                            if (yy < 0 || yy >= x.height()) continue;
                            for (int dx = -r; dx <= r; ++dx) {
                                const int xx = col + dx;
                                if (xx < 0 || xx >= x.width()) continue;
                                grad.at(c, yy, xx) +=
                                    d * f[static_cast<std::size_t>(dy + r) * ksize_ +
                                          (dx + r)];
                            }
                        }
                    }
                }
            }
        }
    }

    // 2x2 mean pooling with partial blocks at odd edges.
    static Tensor pool2(const Tensor& x) {
        const int h2 = (x.height() + 1) / 2;
        const int w2 = (x.width() + 1) / 2;
        Tensor out(x.channels(), h2, w2);
        for (int c = 0; c < x.channels(); ++c) {
            for (int row = 0; row < h2; ++row) {
                for (int col = 0; col < w2; ++col) {
                    double acc = 0.0;
                    int n = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        const int yy = 2 * row + dy;
                        if (yy >= x.height()) continue;
                        for (int dx = 0; dx < 2; ++dx) {
                            const int xx = 2 * col + dx;
                            if (xx >= x.width()) continue;
                            acc += x.at(c, yy, xx);
                            ++n;
                        }
                    }
                    out.at(c, row, col) = acc / n;
                }
            }
        }
        return out;
    }

    static void unpool2_accumulate(Tensor& grad, const Tensor& grad_half) {
        for (int c = 0; c < grad.channels(); ++c) {
            for (int row = 0; row < grad_half.height(); ++row) {
                for (int col = 0; col < grad_half.width(); ++col) {
                    int n = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        const int yy = 2 * row + dy;
                        if (yy >= grad.height()) continue;
                        for (int dx = 0; dx < 2; ++dx) {
                            if (2 * col + dx >= grad.width()) continue;
                            ++n;
                        }
                    }
                    const double share = grad_half.at(c, row, col) / n;
                    for (int dy = 0; dy < 2; ++dy) {
                        const int yy = 2 * row + dy;
                        if (yy >= grad.height()) continue;
                        for (int dx = 0; dx < 2; ++dx) {
                            const int xx = 2 * col + dx;
                            if (xx >= grad.width()) continue;
                            grad.at(c, yy, xx) += share;
                        }
                    }
                }
            }
        }
    }

    std::vector<std::vector<double>> filters_;
    int ksize_ = 0;
};

inline double perceptual_loss(const Tensor& x0, const Tensor& x_est,
                              const FeatureBank& bank, const LossWeights& w) {
    x0.require_same_shape(x_est, "perceptual_loss");
    const auto f0 = bank.features(x0);
    const auto f1 = bank.features(x_est);
    double acc = 0.0;
    for (std::size_t i = 0; i < f0.size(); ++i) {
        const double d = f0[i] - f1[i];
        acc += d * d;
    }
    return w.lambda_per * acc / static_cast<double>(f0.size());
}

inline Tensor perceptual_loss_grad(const Tensor& x0, const Tensor& x_est,
                                   const FeatureBank& bank,
                                   const LossWeights& w) {
    x0.require_same_shape(x_est, "perceptual_loss_grad");
    const auto f0 = bank.features(x0);
    auto dfeat = bank.features(x_est);
    const double scale = w.lambda_per * 2.0 / static_cast<double>(f0.size());
    for (std::size_t i = 0; i < dfeat.size(); ++i) {
        dfeat[i] = scale * (dfeat[i] - f0[i]);
    }
    return bank.input_gradient(x_est, dfeat);
}

struct LossTerm {
    std::string name;
    double value = 0.0;
};

// Plain sum of the named parts; rejects non-finite inputs by name.
inline double total_loss(const std::vector<LossTerm>& parts) {
    double acc = 0.0;
    for (const auto& part : parts) {
        if (!std::isfinite(part.value)) {
            throw numeric_error("loss term '" + part.name + "' is not finite");
        }
        acc += part.value;
    }
    return acc;
}

}  // namespace lumen
