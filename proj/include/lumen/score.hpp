#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"
#include "lumen/schedule.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Score functions (epsilon predictors)
//
//  One evaluation entry point: eps_hat = score(x_t, y, t), with the
//  output shaped like x_t. Evaluations are counted so samplers and the
//  distillation loop can report exact NFE budgets.
// =====================================================================

class ScoreFunction {
public:
    virtual ~ScoreFunction() = default;

    Tensor operator()(const Tensor& x_t, const Tensor& y, int t) const {
        ++eval_count_;
        Tensor out = eval(x_t, y, t);
        if (!out.same_shape(x_t)) {
            throw shape_error("score output shape " + out.shape().str() +
                              " does not match input " + x_t.shape().str());
        }
        return out;
    }

    long long evals() const { return eval_count_; }
    void reset_evals() const { eval_count_ = 0; }

protected:
    virtual Tensor eval(const Tensor& x_t, const Tensor& y, int t) const = 0;

private:
    mutable long long eval_count_ = 0;
};

// Closed-form optimal predictor for x0 ~ Normal(mu, s2*I):
//   eps*(x_t, t) = sigma_t * (x_t - a_t*mu) / (a_t^2*s2 + sigma_t^2)
// Ignores the condition y. Used as an exact teacher in trajectory tests.
class GaussianOracle final : public ScoreFunction {
public:
    GaussianOracle(Tensor mu, double s2, NoiseSchedule sched)
        : mu_(std::move(mu)), s2_(s2), sched_(std::move(sched)) {
        if (s2 < 0.0) {
            throw parameter_error("variance s2 must be >= 0");
        }
    }

protected:
    Tensor eval(const Tensor& x_t, const Tensor& /*y*/, int t) const override {
        x_t.require_same_shape(mu_, "gaussian_oracle");
        sched_.check_step(t);
        if (t == 0) {
            // sigma_0 = 0: the latent is already clean, no noise to predict.
            return Tensor::zeros_like(x_t);
        }
        const double a = sched_.a_at(t);
        const double sig = sched_.sigma_at(t);
        const double denom = a * a * s2_ + sig * sig;
        Tensor out = Tensor::zeros_like(x_t);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = sig * (x_t[i] - a * mu_[i]) / denom;
        }
        return out;
    }

private:
    Tensor mu_;
    double s2_;
    NoiseSchedule sched_;
};

inline GaussianOracle gaussian_oracle(Tensor mu, double s2,
                                      const NoiseSchedule& sched) {
    return GaussianOracle(std::move(mu), s2, sched);
}

// Returns the same tensor for every (x_t, y, t).
class ConstantScore final : public ScoreFunction {
public:
    explicit ConstantScore(Tensor e) : e_(std::move(e)) {}

protected:
    Tensor eval(const Tensor& /*x_t*/, const Tensor& /*y*/, int /*t*/) const override {
        return e_;
    }

private:
    Tensor e_;
};

inline ConstantScore constant_score(Tensor e) { return ConstantScore(std::move(e)); }

// =====================================================================
//  MicroNet — fully connected epsilon predictor with exact reverse-mode
//  gradients. Desk-scale stand-in for a full denoiser: input is the
//  flattened (x_t, y) pair plus a sinusoidal embedding of t; hidden
//  layers use tanh, the output layer is linear and zero-initialized so
//  an untrained net predicts eps = 0.
// =====================================================================

inline std::vector<double> timestep_embedding(int t, int dim) {
    if (dim < 0 || dim % 2 != 0) {
        throw parameter_error("t_embed_dim must be even and >= 0");
    }
    std::vector<double> emb(dim);
    const int half = dim / 2;
    for (int k = 0; k < half; ++k) {
        const double freq =
            std::exp(-std::log(10000.0) * static_cast<double>(k) /
                     static_cast<double>(half));
        emb[2 * k] = std::sin(t * freq);
        emb[2 * k + 1] = std::cos(t * freq);
    }
    return emb;
}

struct MicroNetSpec {
    Shape image_shape;                      // shape of x_t and y
    std::vector<int> hidden = {128, 128, 128};
    int t_embed_dim = 16;

    int input_width() const {
        return 2 * static_cast<int>(image_shape.count()) + t_embed_dim;
    }

    int output_width() const { return static_cast<int>(image_shape.count()); }

    // Layer widths including input and output.
    std::vector<int> widths() const {
        std::vector<int> w;
        w.reserve(hidden.size() + 2);
        w.push_back(input_width());
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(output_width());
        return w;
    }

    std::size_t param_count() const {
        const auto w = widths();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < w.size(); ++l) {
            n += static_cast<std::size_t>(w[l]) * w[l + 1] + w[l + 1];
        }
        return n;
    }

    bool operator==(const MicroNetSpec&) const = default;
};

class MicroNet {
public:
    struct Cache {
        std::vector<std::vector<double>> activations;  // [0] = input
        std::uint64_t revision = 0;
        bool valid = false;
    };

    explicit MicroNet(MicroNetSpec spec)
        : spec_(std::move(spec)),
          widths_(spec_.widths()),
          params_(spec_.param_count(), 0.0) {}

    const MicroNetSpec& spec() const { return spec_; }
    std::uint64_t revision() const { return revision_; }
    const std::vector<double>& params() const { return params_; }

    void set_params(std::vector<double> p) {
        if (p.size() != params_.size()) {
            throw shape_error("parameter vector length " +
                              std::to_string(p.size()) + " does not match " +
                              std::to_string(params_.size()));
        }
        params_ = std::move(p);
        ++revision_;
    }

    // Seeded uniform init scaled by 1/sqrt(fan_in); final layer zeroed.
    void init_params(std::uint64_t seed) {
        Rng rng = Rng::substream(seed, "init");
        std::size_t offset = 0;
        const std::size_t layers = widths_.size() - 1;
        for (std::size_t l = 0; l < layers; ++l) {
            const int fan_in = widths_[l];
            const int fan_out = widths_[l + 1];
            const double scale =
                l + 1 == layers ? 0.0 : 1.0 / std::sqrt(static_cast<double>(fan_in));
            const std::size_t n =
                static_cast<std::size_t>(fan_in) * fan_out + fan_out;
            for (std::size_t i = 0; i < n; ++i) {
                params_[offset + i] = scale == 0.0 ? 0.0 : rng.uniform(-scale, scale);
            }
            offset += n;
        }
        ++revision_;
    }

    Tensor forward(const Tensor& x_t, const Tensor& y, int t,
                   Cache* cache = nullptr) const {
        std::vector<double> input = assemble_input(x_t, y, t);
        std::vector<std::vector<double>> acts;
        acts.reserve(widths_.size());
        acts.push_back(std::move(input));

        std::size_t offset = 0;
        const std::size_t layers = widths_.size() - 1;
        for (std::size_t l = 0; l < layers; ++l) {
            const int in_w = widths_[l];
            const int out_w = widths_[l + 1];
            std::vector<double> out(out_w);
            const double* W = params_.data() + offset;
            const double* b = W + static_cast<std::size_t>(in_w) * out_w;
            const std::vector<double>& prev = acts.back();
            for (int o = 0; o < out_w; ++o) {
                const double* row = W + static_cast<std::size_t>(o) * in_w;
                double acc = b[o];
                for (int i = 0; i < in_w; ++i) acc += row[i] * prev[i];
                out[o] = (l + 1 == layers) ? acc : std::tanh(acc);
            }
            acts.push_back(std::move(out));
            offset += static_cast<std::size_t>(in_w) * out_w + out_w;
        }

        Tensor result = Tensor::from_flat(x_t.shape(), acts.back());
        if (cache != nullptr) {
            cache->activations = std::move(acts);
            cache->revision = revision_;
            cache->valid = true;
        }
        return result;
    }

    // Exact reverse-mode gradient of a scalar loss with respect to every
    // parameter, given dLoss/dOutput. Requires a cache from a forward
    // pass against the current parameters.
    std::vector<double> backward(const Cache& cache, const Tensor& grad_out) const {
        if (!cache.valid || cache.revision != revision_ ||
            cache.activations.size() != widths_.size()) {
            throw state_error("stale forward cache: parameters changed since the "
                              "cached forward pass");
        }
        if (grad_out.size() != static_cast<std::size_t>(widths_.back())) {
            throw shape_error("upstream gradient width " +
                              std::to_string(grad_out.size()) +
                              " does not match output width " +
                              std::to_string(widths_.back()));
        }

        std::vector<double> grads(params_.size(), 0.0);
        std::vector<double> delta(grad_out.flat());

        // Offsets of each layer's parameter block.
        const std::size_t layers = widths_.size() - 1;
        std::vector<std::size_t> offsets(layers);
        std::size_t off = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] +
                   widths_[l + 1];
        }

        for (std::size_t l = layers; l-- > 0;) {
            const int in_w = widths_[l];
            const int out_w = widths_[l + 1];
            const std::vector<double>& prev = cache.activations[l];
            const double* W = params_.data() + offsets[l];
            double* gW = grads.data() + offsets[l];
            double* gb = gW + static_cast<std::size_t>(in_w) * out_w;

            for (int o = 0; o < out_w; ++o) {
                const double d = delta[o];
                double* grow = gW + static_cast<std::size_t>(o) * in_w;
                for (int i = 0; i < in_w; ++i) grow[i] += d * prev[i];
                gb[o] += d;
            }

            if (l > 0) {
                std::vector<double> prev_delta(in_w, 0.0);
                for (int o = 0; o < out_w; ++o) {
                    const double d = delta[o];
                    const double* row = W + static_cast<std::size_t>(o) * in_w;
                    for (int i = 0; i < in_w; ++i) prev_delta[i] += row[i] * d;
                }
                // tanh'(z) = 1 - tanh(z)^2, from the stored activations.
                for (int i = 0; i < in_w; ++i) {
                    const double a = prev[i];
                    prev_delta[i] *= 1.0 - a * a;
                }
                delta = std::move(prev_delta);
            }
        }
        return grads;
    }

private:
    std::vector<double> assemble_input(const Tensor& x_t, const Tensor& y,
                                       int t) const {
        if (x_t.shape() != spec_.image_shape || y.shape() != spec_.image_shape) {
            throw shape_error("micronet expects " + spec_.image_shape.str() +
                              " inputs, got x_t " + x_t.shape().str() + ", y " +
                              y.shape().str());
        }
        std::vector<double> input;
        input.reserve(spec_.input_width());
        input.insert(input.end(), x_t.flat().begin(), x_t.flat().end());
        input.insert(input.end(), y.flat().begin(), y.flat().end());
        const auto emb = timestep_embedding(t, spec_.t_embed_dim);
        input.insert(input.end(), emb.begin(), emb.end());
        return input;
    }

    MicroNetSpec spec_;
    std::vector<int> widths_;
    std::vector<double> params_;
    std::uint64_t revision_ = 0;
};

// Read-only score view over a micro net (e.g. EMA weights for sampling).
class MicroNetScore final : public ScoreFunction {
public:
    explicit MicroNetScore(MicroNet net) : net_(std::move(net)) {}

    const MicroNet& net() const { return net_; }

protected:
    Tensor eval(const Tensor& x_t, const Tensor& y, int t) const override {
        return net_.forward(x_t, y, t);
    }

private:
    MicroNet net_;
};

}  // namespace lumen
