#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/tensor.hpp"

namespace lumen {

// =====================================================================
//  Portable pixmap / graymap I/O
//
//  Reads P2/P3 (plain) and P5/P6 (binary) with maxval 255 or 65535,
//  scaling pixels to [0,1]. Writes binary P5 (1 channel) or P6
//  (3 channels) at maxval 255; write-then-read round-trips within one
//  quantization step. Parse errors carry the byte offset.
// =====================================================================

namespace pnm_detail {

[[noreturn]] inline void fail(const std::string& what, std::istream& in) {
    const auto pos = in.tellg();
    const long offset = pos < 0 ? -1 : static_cast<long>(pos);
    throw parse_error("pnm: " + what + " (byte offset " +
                      std::to_string(offset) + ")");
}

// Skips whitespace and '#' comments between header tokens.
inline void skip_separators(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
        } else {
            return;
        }
    }
}

inline long read_header_int(std::istream& in, const char* field) {
    skip_separators(in);
    long value = 0;
    bool any = false;
    while (true) {
        const int c = in.peek();
        if (c < '0' || c > '9') break;
        value = value * 10 + (in.get() - '0');
        any = true;
        if (value > 1000000000L) fail(std::string(field) + " out of range", in);
    }
    if (!any) fail(std::string("expected integer for ") + field, in);
    return value;
}

}  // namespace pnm_detail

inline Tensor read_image(std::istream& in) {
    using pnm_detail::fail;
    char p = 0;
    char digit = 0;
    in.get(p);
    in.get(digit);
    if (!in || p != 'P' || (digit != '2' && digit != '3' && digit != '5' && digit != '6')) {
        fail("unsupported magic (want P2/P3/P5/P6)", in);
    }
    const bool binary = digit == '5' || digit == '6';
    const int channels = (digit == '3' || digit == '6') ? 3 : 1;

    const long width = pnm_detail::read_header_int(in, "width");
    const long height = pnm_detail::read_header_int(in, "height");
    const long maxval = pnm_detail::read_header_int(in, "maxval");
    if (width <= 0 || height <= 0) fail("non-positive dimensions", in);
    if (maxval != 255 && maxval != 65535) fail("maxval must be 255 or 65535", in);

    Tensor img(channels, static_cast<int>(height), static_cast<int>(width));
    const std::size_t count = img.size();

    if (binary) {
        // Exactly one whitespace byte separates the header from the raster.
        const int sep = in.get();
        if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
            fail("missing raster separator", in);
        }
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(count * bytes);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
            fail("truncated raster", in);
        }
        // Raster order is row-major interleaved; tensor is planar.
        std::size_t k = 0;
        for (int row = 0; row < img.height(); ++row) {
            for (int col = 0; col < img.width(); ++col) {
                for (int c = 0; c < channels; ++c) {
                    long v;
                    if (bytes == 2) {
                        v = (static_cast<long>(buf[k]) << 8) | buf[k + 1];  // big-endian
                        k += 2;
                    } else {
                        v = buf[k++];
                    }
                    img.at(c, row, col) = static_cast<double>(v) / maxval;
                }
            }
        }
    } else {
        for (int row = 0; row < img.height(); ++row) {
            for (int col = 0; col < img.width(); ++col) {
                for (int c = 0; c < channels; ++c) {
                    const long v = pnm_detail::read_header_int(in, "pixel");
                    if (v > maxval) fail("pixel exceeds maxval", in);
                    img.at(c, row, col) = static_cast<double>(v) / maxval;
                }
            }
        }
    }
    return img;
}

inline Tensor read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw parse_error("cannot open image file: " + path.string());
    }
    return read_image(in);
}

inline void write_image(const Tensor& img, std::ostream& out) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw parameter_error("write_image supports 1 or 3 channels, got " +
                              std::to_string(img.channels()));
    }
    if (img.empty()) {
        throw shape_error("write_image: empty image");
    }
    out << (img.channels() == 1 ? "P5" : "P6") << "\n"
        << img.width() << " " << img.height() << "\n255\n";
    for (int row = 0; row < img.height(); ++row) {
        for (int col = 0; col < img.width(); ++col) {
            for (int c = 0; c < img.channels(); ++c) {
                const double v = std::clamp(img.at(c, row, col), 0.0, 1.0);
                out.put(static_cast<char>(
                    static_cast<unsigned char>(std::lround(v * 255.0))));
            }
        }
    }
}

inline void write_image(const Tensor& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw parse_error("cannot open image file for writing: " + path.string());
    }
    write_image(img, out);
    if (!out) {
        throw parse_error("short write to image file: " + path.string());
    }
}

}  // namespace lumen
