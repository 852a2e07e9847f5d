#pragma once

#include <string>

#include "wm/tensor.hpp"

namespace wm {

/// Binary PGM (P5, maxval <= 255).
ImageU8 read_pgm(const std::string& path);
void write_pgm(const ImageU8& img, const std::string& path);

/// P5 directly; P6 (PPM) is converted to grayscale with BT.601 luminance.
ImageU8 read_image_gray(const std::string& path);

/// Watermark bit grids: P4 PBM (auto-detected) or packed row-major bits,
/// MSB first, ceil(h*w/8) bytes. A 32x32 watermark packs to 128 bytes.
BitGrid read_bits(const std::string& path, int height, int width);
void write_bits_packed(const BitGrid& bits, const std::string& path);
void write_pbm(const BitGrid& bits, const std::string& path);

}  // namespace wm
