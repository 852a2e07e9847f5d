#include "wm/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <vector>

#include "wm/dataset.hpp"
#include "wm/errors.hpp"

namespace wm {

namespace {

// Header token reader: skips whitespace and '#' comment lines.
int next_header_int(std::istream& in, const std::string& path) {
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw IoError(path + ": truncated header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw IoError(path + ": malformed header");
    return value;
}

struct PnmHeader {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& path, bool has_maxval) {
    PnmHeader h;
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in) throw IoError(path + ": not a PNM file");
    h.magic = std::string{m0, m1};
    h.width = next_header_int(in, path);
    h.height = next_header_int(in, path);
    if (has_maxval) h.maxval = next_header_int(in, path);
    in.get();  // single whitespace before raster
    if (!in) throw IoError(path + ": truncated header");
    if (h.width <= 0 || h.height <= 0) throw IoError(path + ": bad dimensions");
    return h;
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::ofstream create_binary(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    return out;
}

}  // namespace

ImageU8 read_pgm(const std::string& path) {
    auto in = open_binary(path);
    const PnmHeader h = read_pnm_header(in, path, true);
    if (h.magic != "P5") throw IoError(path + ": expected binary PGM (P5), got " + h.magic);
    if (h.maxval <= 0 || h.maxval > 255) throw IoError(path + ": unsupported maxval");
    ImageU8 img(h.height, h.width);
    in.read(reinterpret_cast<char*>(img.pix.data()), static_cast<std::streamsize>(img.pix.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pix.size()))
        throw IoError(path + ": truncated pixel data");
    return img;
}

void write_pgm(const ImageU8& img, const std::string& path) {
    auto out = create_binary(path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pix.data()),
              static_cast<std::streamsize>(img.pix.size()));
    if (!out) throw IoError("failed writing " + path);
}

ImageU8 read_image_gray(const std::string& path) {
    auto in = open_binary(path);
    const PnmHeader h = read_pnm_header(in, path, true);
    if (h.maxval <= 0 || h.maxval > 255) throw IoError(path + ": unsupported maxval");
    if (h.magic == "P5") {
        ImageU8 img(h.height, h.width);
        in.read(reinterpret_cast<char*>(img.pix.data()),
                static_cast<std::streamsize>(img.pix.size()));
        if (in.gcount() != static_cast<std::streamsize>(img.pix.size()))
            throw IoError(path + ": truncated pixel data");
        return img;
    }
    if (h.magic == "P6") {
        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(h.width) * h.height * 3);
        in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
        if (in.gcount() != static_cast<std::streamsize>(rgb.size()))
            throw IoError(path + ": truncated pixel data");
        ImageU8 img(h.height, h.width);
        for (std::size_t i = 0; i < img.pix.size(); ++i) {
            const double y = rgb_to_gray(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
            img.pix[i] = static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, y + 0.5)));
        }
        return img;
    }
    throw IoError(path + ": expected P5 or P6, got " + h.magic);
}

BitGrid read_bits(const std::string& path, int height, int width) {
    auto in = open_binary(path);
    char m0 = 0;
    in.get(m0);
    BitGrid grid(height, width);
    const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
    if (m0 == 'P') {
        char m1 = 0;
        in.get(m1);
        if (m1 != '4') throw IoError(path + ": expected P4 PBM");
        const int w = next_header_int(in, path);
        const int h = next_header_int(in, path);
        in.get();
        if (w != width || h != height)
            throw IoError(path + ": expected " + std::to_string(width) + "x" +
                          std::to_string(height) + " bits, got " + std::to_string(w) + "x" +
                          std::to_string(h));
        std::vector<std::uint8_t> row(row_bytes);
        for (int y = 0; y < height; ++y) {
            in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_bytes));
            if (in.gcount() != static_cast<std::streamsize>(row_bytes))
                throw IoError(path + ": truncated bit rows");
            for (int x = 0; x < width; ++x)
                grid.at(y, x) = (row[x / 8] >> (7 - x % 8)) & 1;
        }
        return grid;
    }
    // Packed bits, row-major MSB first, no per-row padding.
    in.seekg(0);
    const std::size_t total_bytes = (grid.size() + 7) / 8;
    std::vector<std::uint8_t> packed(total_bytes);
    in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(total_bytes));
    if (in.gcount() != static_cast<std::streamsize>(total_bytes))
        throw IoError(path + ": expected " + std::to_string(total_bytes) + " bytes of packed bits");
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid.bits[i] = (packed[i / 8] >> (7 - i % 8)) & 1;
    return grid;
}

void write_bits_packed(const BitGrid& bits, const std::string& path) {
    auto out = create_binary(path);
    std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits.bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    if (!out) throw IoError("failed writing " + path);
}

void write_pbm(const BitGrid& bits, const std::string& path) {
    auto out = create_binary(path);
    out << "P4\n" << bits.width << " " << bits.height << "\n";
    const std::size_t row_bytes = (static_cast<std::size_t>(bits.width) + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < bits.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < bits.width; ++x)
            if (bits.at(y, x)) row[x / 8] |= static_cast<std::uint8_t>(1u << (7 - x % 8));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row_bytes));
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace wm
