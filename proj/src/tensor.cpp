#include "wm/tensor.hpp"

#include <cmath>
#include <string>

#include "wm/errors.hpp"

namespace wm {

Image to_image(const ImageU8& u) {
    Image f(u.height, u.width);
    for (std::size_t i = 0; i < u.pix.size(); ++i) f.pix[i] = static_cast<double>(u.pix[i]);
    return f;
}

ImageU8 to_u8(const Image& f) {
    ImageU8 u(f.height, f.width);
    for (std::size_t i = 0; i < f.pix.size(); ++i) {
        double v = std::round(f.pix[i]);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        u.pix[i] = static_cast<std::uint8_t>(v);
    }
    return u;
}

bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

Tensor3 space_to_depth(const Image& img, int block_rows, int block_cols) {
    if (block_rows < 1 || block_cols < 1)
        throw ShapeError("space_to_depth: block dimensions must be positive");
    if (img.height % block_rows != 0 || img.width % block_cols != 0)
        throw ShapeError("space_to_depth: block size " + std::to_string(block_rows) + "x" +
                         std::to_string(block_cols) + " does not divide image " +
                         std::to_string(img.height) + "x" + std::to_string(img.width));
    const int gh = img.height / block_rows;
    const int gw = img.width / block_cols;
    Tensor3 t(block_rows * block_cols, gh, gw);
    for (int m = 0; m < block_rows; ++m) {
        for (int n = 0; n < block_cols; ++n) {
            const int c = m * block_cols + n;
            for (int by = 0; by < gh; ++by)
                for (int bx = 0; bx < gw; ++bx)
                    t.at(c, by, bx) = img.at(by * block_rows + m, bx * block_cols + n);
        }
    }
    return t;
}

Image depth_to_space(const Tensor3& t, int block_rows, int block_cols) {
    if (t.channels != block_rows * block_cols)
        throw ShapeError("depth_to_space: expected " + std::to_string(block_rows * block_cols) +
                         " channels, got " + std::to_string(t.channels));
    Image img(t.height * block_rows, t.width * block_cols);
    for (int m = 0; m < block_rows; ++m) {
        for (int n = 0; n < block_cols; ++n) {
            const int c = m * block_cols + n;
            for (int by = 0; by < t.height; ++by)
                for (int bx = 0; bx < t.width; ++bx)
                    img.at(by * block_rows + m, bx * block_cols + n) = t.at(c, by, bx);
        }
    }
    return img;
}

}  // namespace wm
