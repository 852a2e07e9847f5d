#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wm {

/// channels x height x width buffer of doubles, row-major in
/// (channel, row, column) order. The universal value/gradient carrier.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, 0.0) {}

    std::size_t size() const { return data.size(); }
    int plane_size() const { return height * width; }

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * plane_size(); }
    const double* plane(int c) const {
        return data.data() + static_cast<std::size_t>(c) * plane_size();
    }

    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

/// Grayscale image as doubles in pixel units (nominally [0, 255]).
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pix;

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), pix(static_cast<std::size_t>(h) * w, fill) {}

    std::size_t size() const { return pix.size(); }
    double& at(int y, int x) { return pix[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return pix[static_cast<std::size_t>(y) * width + x]; }
    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

/// 8-bit grayscale image (the storage/attack domain).
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pix;

    ImageU8() = default;
    ImageU8(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), pix(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return pix[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return pix[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary grid; values are 0/1.
struct BitGrid {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    BitGrid() = default;
    BitGrid(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {}

    std::size_t size() const { return bits.size(); }
    std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
};

Image to_image(const ImageU8& u);
/// Round to nearest and clamp to [0, 255].
ImageU8 to_u8(const Image& f);

bool all_finite(const double* p, std::size_t n);
inline bool all_finite(const Tensor3& t) { return all_finite(t.data.data(), t.size()); }
inline bool all_finite(const Image& im) { return all_finite(im.pix.data(), im.size()); }

/// Rearrange M x N pixel blocks into MN channels: channel k = m*N + n holds
/// pixel (block_row*M + m, block_col*N + n). Throws ShapeError when M or N
/// does not divide the image dimensions.
Tensor3 space_to_depth(const Image& img, int block_rows, int block_cols);

/// Exact inverse of space_to_depth under the same index convention.
Image depth_to_space(const Tensor3& t, int block_rows, int block_cols);

}  // namespace wm
