#pragma once

#include <cmath>
#include <string>

#include "lumen/errors.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Full-reference quality metrics
//
//  Both metrics operate on luminance (the channel mean) for multichannel
//  inputs and expect values on the [0,1] scale. SSIM uses uniform 8x8
//  windows at stride 1 with the standard stabilizers, so values are
//  comparable only within this engine.
// =====================================================================

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 8;

inline Tensor luminance(const Tensor& x) {
    if (x.channels() == 1) return x;
    Tensor out(1, x.height(), x.width());
    for (int row = 0; row < x.height(); ++row) {
        for (int col = 0; col < x.width(); ++col) {
            double acc = 0.0;
            for (int c = 0; c < x.channels(); ++c) acc += x.at(c, row, col);
            out.at(0, row, col) = acc / x.channels();
        }
    }
    return out;
}

// 10*log10(1/MSE) in decibels; 99 dB when the images are identical.
inline double psnr(const Tensor& a, const Tensor& b) {
    a.require_same_shape(b, "psnr");
    const double m = mse(luminance(a), luminance(b));
    if (m <= 0.0) return kPsnrCap;
    return 10.0 * std::log10(1.0 / m);
}

// Mean local SSIM over all 8x8 windows, stride 1, uniform weighting,
// C1 = 0.01^2 and C2 = 0.03^2 on the [0,1] range.
inline double ssim(const Tensor& a, const Tensor& b) {
    a.require_same_shape(b, "ssim");
    const Tensor la = luminance(a);
    const Tensor lb = luminance(b);
    const int h = la.height();
    const int w = la.width();
    if (h < kSsimWindow || w < kSsimWindow) {
        throw size_error("ssim: image " + std::to_string(w) + "x" +
                         std::to_string(h) + " smaller than the " +
                         std::to_string(kSsimWindow) + "x" +
                         std::to_string(kSsimWindow) + " window");
    }

    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    constexpr int n = kSsimWindow * kSsimWindow;

    double acc = 0.0;
    long windows = 0;
    for (int row = 0; row + kSsimWindow <= h; ++row) {
        for (int col = 0; col + kSsimWindow <= w; ++col) {
            double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int dy = 0; dy < kSsimWindow; ++dy) {
                for (int dx = 0; dx < kSsimWindow; ++dx) {
                    const double va = la.at(0, row + dy, col + dx);
                    const double vb = lb.at(0, row + dy, col + dx);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            const double mu_a = sa / n;
            const double mu_b = sb / n;
            const double var_a = saa / n - mu_a * mu_a;
            const double var_b = sbb / n - mu_b * mu_b;
            const double cov = sab / n - mu_a * mu_b;
            const double value =
                ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            acc += value;
            ++windows;
        }
    }
    return acc / static_cast<double>(windows);
}

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
};

inline MetricReport compare(const Tensor& a, const Tensor& b) {
    MetricReport r;
    r.mse = mse(luminance(a), luminance(b));
    r.psnr = psnr(a, b);
    r.ssim = ssim(a, b);
    return r;
}

}  // namespace lumen
