#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"

namespace lumen {

// =====================================================================
//  Tensor — rank-<=3 numeric array (channels x height x width)
//
//  The single carrier type for images, latents and noise. Pixel data is
//  kept on a [0,1] scale by convention but the container itself is
//  unbounded; clamping is an explicit operation.
// =====================================================================

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    bool operator==(const Shape&) const = default;

    std::size_t count() const {
        return static_cast<std::size_t>(channels) *
               static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }

    std::string str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" +
               std::to_string(width);
    }
};

class Tensor {
public:
    Tensor() = default;

    Tensor(int channels, int height, int width, double fill = 0.0)
        : shape_{channels, height, width}, data_(shape_.count(), fill) {
        if (channels < 0 || height < 0 || width < 0) {
            throw shape_error("tensor dimensions must be non-negative");
        }
    }

    explicit Tensor(Shape s, double fill = 0.0)
        : Tensor(s.channels, s.height, s.width, fill) {}

    static Tensor from_flat(Shape s, std::vector<double> values) {
        if (values.size() != s.count()) {
            throw shape_error("flat data length " +
                              std::to_string(values.size()) +
                              " does not match shape " + s.str());
        }
        Tensor t;
        t.shape_ = s;
        t.data_ = std::move(values);
        return t;
    }

    static Tensor zeros_like(const Tensor& other) {
        return Tensor(other.shape_);
    }

    static Tensor full_like(const Tensor& other, double value) {
        return Tensor(other.shape_, value);
    }

    static Tensor gaussian(Shape s, Rng& rng) {
        Tensor t(s);
        for (auto& v : t.data_) v = rng.gaussian();
        return t;
    }

    const Shape& shape() const { return shape_; }
    int channels() const { return shape_.channels; }
    int height() const { return shape_.height; }
    int width() const { return shape_.width; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    std::vector<double>& flat() { return data_; }
    const std::vector<double>& flat() const { return data_; }

    double sum() const {
        double acc = 0.0;
        for (double v : data_) acc += v;
        return acc;
    }

    double mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }

    double min() const { return *std::min_element(data_.begin(), data_.end()); }
    double max() const { return *std::max_element(data_.begin(), data_.end()); }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    Tensor& clamp_(double lo, double hi) {
        for (auto& v : data_) v = std::clamp(v, lo, hi);
        return *this;
    }

    Tensor clamped(double lo, double hi) const {
        Tensor out = *this;
        out.clamp_(lo, hi);
        return out;
    }

    Tensor& operator+=(const Tensor& other) {
        require_same_shape(other, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    Tensor& operator-=(const Tensor& other) {
        require_same_shape(other, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }

    Tensor& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

    void require_same_shape(const Tensor& other, const char* context) const {
        if (!same_shape(other)) {
            throw shape_error(std::string(context) + ": shape " + shape_.str() +
                              " vs " + other.shape_.str());
        }
    }

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * shape_.height +
                static_cast<std::size_t>(y)) *
                   shape_.width +
               static_cast<std::size_t>(x);
    }

    Shape shape_{};
    std::vector<double> data_{};
};

inline Tensor operator+(Tensor lhs, const Tensor& rhs) {
    lhs += rhs;
    return lhs;
}

inline Tensor operator-(Tensor lhs, const Tensor& rhs) {
    lhs -= rhs;
    return lhs;
}

inline Tensor operator*(double s, Tensor t) {
    t *= s;
    return t;
}

// a*x + b*y, the workhorse of the trajectory algebra.
inline Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
    x.require_same_shape(y, "axpby");
    Tensor out = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

inline Tensor elementwise_mul(const Tensor& x, const Tensor& y) {
    x.require_same_shape(y, "elementwise_mul");
    Tensor out = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    a.require_same_shape(b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Mean squared error with fixed summation order (resolution independent).
inline double mse(const Tensor& a, const Tensor& b) {
    a.require_same_shape(b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return a.size() == 0 ? 0.0 : acc / static_cast<double>(a.size());
}

}  // namespace lumen
