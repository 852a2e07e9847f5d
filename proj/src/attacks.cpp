#include "wm/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wm/errors.hpp"

namespace wm {

namespace {

// Baseline luminance quantization table (JPEG Annex K), row-major.
constexpr std::array<int, 64> kBaseQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void AttackSpec::validate() const {
    switch (kind) {
        case Kind::identity:
            return;
        case Kind::gaussian_noise:
        case Kind::uniform_noise:
            if (!(value >= 0.0)) throw ConfigError("noise level must be >= 0");
            return;
        case Kind::salt_pepper:
            if (!(value >= 0.0 && value <= 1.0))
                throw ConfigError("salt & pepper probability must be in [0, 1]");
            return;
        case Kind::block_crop:
            if (!(value >= 0.0 && value <= 1.0))
                throw ConfigError("block crop fraction must be in [0, 1]");
            return;
        case Kind::smoothing: {
            const int a = static_cast<int>(value);
            if (a < 1 || a % 2 == 0 || static_cast<double>(a) != value)
                throw ConfigError("smoothing mask size must be an odd integer >= 1");
            return;
        }
        case Kind::jpeg_approx: {
            const int q = static_cast<int>(value);
            if (q < 1 || q > 100 || static_cast<double>(q) != value)
                throw ConfigError("jpeg quality must be an integer in [1, 100]");
            return;
        }
    }
}

std::string AttackSpec::to_string() const {
    switch (kind) {
        case Kind::identity:
            return "identity";
        case Kind::gaussian_noise:
            return "gaussian(" + format_double(value) + ")";
        case Kind::uniform_noise:
            return "uniform(" + format_double(value) + ")";
        case Kind::salt_pepper:
            return "salt_pepper(" + format_double(value) + ")";
        case Kind::block_crop:
            return "block_crop(" + format_double(value) + ")";
        case Kind::smoothing:
            return "smooth(" + format_double(value) + ")";
        case Kind::jpeg_approx:
            return "jpeg(" + format_double(value) + ")";
    }
    return "identity";
}

AttackSpec AttackSpec::parse(const std::string& text) {
    AttackSpec spec;
    std::string name = text;
    const auto open = text.find('(');
    if (open != std::string::npos) {
        const auto close = text.rfind(')');
        if (close == std::string::npos || close < open)
            throw ConfigError("malformed attack spec: " + text);
        name = text.substr(0, open);
        const std::string arg = text.substr(open + 1, close - open - 1);
        try {
            spec.value = std::stod(arg);
        } catch (const std::exception&) {
            throw ConfigError("bad attack parameter in: " + text);
        }
    }
    if (name == "identity") spec.kind = Kind::identity;
    else if (name == "gaussian") spec.kind = Kind::gaussian_noise;
    else if (name == "uniform") spec.kind = Kind::uniform_noise;
    else if (name == "salt_pepper") spec.kind = Kind::salt_pepper;
    else if (name == "block_crop") spec.kind = Kind::block_crop;
    else if (name == "smooth") spec.kind = Kind::smoothing;
    else if (name == "jpeg") spec.kind = Kind::jpeg_approx;
    else throw ConfigError("unknown attack kind: " + name);
    spec.validate();
    return spec;
}

void AttackMixture::validate() const {
    if (entries.empty()) throw ConfigError("attack mixture must not be empty");
    double sum = 0.0;
    for (const auto& [spec, p] : entries) {
        spec.validate();
        if (!(p >= 0.0)) throw ConfigError("attack probabilities must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("attack probabilities must sum to 1, got " + format_double(sum));
}

std::string AttackMixture::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ",";
        out += entries[i].first.to_string() + ":" + format_double(entries[i].second);
    }
    return out;
}

AttackMixture AttackMixture::parse(const std::string& text) {
    AttackMixture mix;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        pos = comma + 1;
        if (item.empty()) continue;
        // The probability separator is the last ':' past any ')' argument.
        const auto close = item.rfind(')');
        const auto colon = item.rfind(':');
        double prob = 1.0;
        std::string spec_text = item;
        if (colon != std::string::npos && (close == std::string::npos || colon > close)) {
            spec_text = item.substr(0, colon);
            try {
                prob = std::stod(item.substr(colon + 1));
            } catch (const std::exception&) {
                throw ConfigError("bad mixture probability in: " + item);
            }
        }
        mix.entries.emplace_back(AttackSpec::parse(spec_text), prob);
    }
    if (mix.entries.size() == 1) mix.entries[0].second = 1.0;
    mix.validate();
    return mix;
}

std::size_t sample_attack(const AttackMixture& mix, RandomStream& rng) {
    mix.validate();
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < mix.entries.size(); ++i) {
        acc += mix.entries[i].second;
        if (u < acc) return i;
    }
    return mix.entries.size() - 1;
}

QuantMatrix build_quant_matrix(int quality) {
    if (quality < 1 || quality > 100)
        throw ConfigError("jpeg quality must be in [1, 100], got " + std::to_string(quality));
    const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    QuantMatrix q;
    q.quality = quality;
    for (int i = 0; i < 64; ++i)
        q.values[i] = std::clamp((kBaseQuant[i] * s + 50) / 100, 1, 255);
    return q;
}

// ---------------------------------------------------------------------------
// 8x8 orthonormal DCT-II pair for the JPEG paths.

namespace {

const std::array<double, 64>& dct_basis() {
    static const std::array<double, 64> c = [] {
        std::array<double, 64> m{};
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x)
                m[u * 8 + x] = a * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
        }
        return m;
    }();
    return c;
}

}  // namespace

void jpeg_dct8x8(const double* block, double* coeffs) {
    const auto& c = dct_basis();
    double tmp[64];
    // tmp = C * block
    for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += c[u * 8 + k] * block[k * 8 + x];
            tmp[u * 8 + x] = s;
        }
    // coeffs = tmp * C^T
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += tmp[u * 8 + k] * c[v * 8 + k];
            coeffs[u * 8 + v] = s;
        }
}

void jpeg_idct8x8(const double* coeffs, double* block) {
    const auto& c = dct_basis();
    double tmp[64];
    // tmp = C^T * coeffs
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += c[k * 8 + x] * coeffs[k * 8 + v];
            tmp[x * 8 + v] = s;
        }
    // block = tmp * C
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += tmp[x * 8 + k] * c[k * 8 + y];
            block[x * 8 + y] = s;
        }
}

namespace {

void require_blocks8(int h, int w, const char* who) {
    if (h % 8 != 0 || w % 8 != 0)
        throw ShapeError(std::string(who) + ": image dimensions must be divisible by 8");
}

// Reflective border index (edge pixel duplicated).
inline int reflect(int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

Image mean_filter_reflect(const Image& img, int a) {
    const int r = a / 2;
    const double scale = 1.0 / (static_cast<double>(a) * a);
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double s = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    s += img.at(reflect(y + dy, img.height), reflect(x + dx, img.width));
            out.at(y, x) = s * scale;
        }
    return out;
}

// Adjoint of mean_filter_reflect: scatter each output gradient back through
// the same taps.
Image mean_filter_reflect_adjoint(const Image& grad, int a) {
    const int r = a / 2;
    const double scale = 1.0 / (static_cast<double>(a) * a);
    Image out(grad.height, grad.width);
    for (int y = 0; y < grad.height; ++y)
        for (int x = 0; x < grad.width; ++x) {
            const double g = grad.at(y, x) * scale;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    out.at(reflect(y + dy, grad.height), reflect(x + dx, grad.width)) += g;
        }
    return out;
}

std::vector<std::uint8_t> sample_block_mask(int height, int width, double fraction,
                                            RandomStream& rng) {
    require_blocks8(height, width, "block_crop");
    const int by = height / 8, bx = width / 8;
    const int total = by * bx;
    const int count = static_cast<int>(std::ceil(fraction * total));
    std::vector<int> blocks(total);
    for (int i = 0; i < total; ++i) blocks[i] = i;
    // Partial Fisher-Yates: the first `count` entries are a uniform sample
    // without replacement.
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(total - i)));
        std::swap(blocks[i], blocks[j]);
    }
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * width, 0);
    for (int i = 0; i < count; ++i) {
        const int b = blocks[i];
        const int y0 = (b / bx) * 8, x0 = (b % bx) * 8;
        for (int y = y0; y < y0 + 8; ++y)
            for (int x = x0; x < x0 + 8; ++x) mask[static_cast<std::size_t>(y) * width + x] = 1;
    }
    return mask;
}

}  // namespace

DiffAttack DiffAttack::make(const AttackSpec& spec, int height, int width, RandomStream& rng) {
    spec.validate();
    DiffAttack at;
    at.spec_ = spec;
    at.height_ = height;
    at.width_ = width;
    switch (spec.kind) {
        case AttackSpec::Kind::identity:
        case AttackSpec::Kind::smoothing:
            break;
        case AttackSpec::Kind::gaussian_noise:
            at.noise_ = Image(height, width);
            for (double& v : at.noise_.pix) v = rng.normal(0.0, spec.value);
            break;
        case AttackSpec::Kind::uniform_noise:
            at.noise_ = Image(height, width);
            for (double& v : at.noise_.pix) v = rng.uniform(-spec.value, spec.value);
            break;
        case AttackSpec::Kind::salt_pepper:
            at.mask_.assign(static_cast<std::size_t>(height) * width, 0);
            for (auto& m : at.mask_)
                if (rng.uniform() < spec.value) m = rng.uniform() < 0.5 ? 1 : 2;
            break;
        case AttackSpec::Kind::block_crop:
            at.mask_ = sample_block_mask(height, width, spec.value, rng);
            break;
        case AttackSpec::Kind::jpeg_approx:
            require_blocks8(height, width, "jpeg_approx");
            at.quant_ = build_quant_matrix(static_cast<int>(spec.value));
            at.noise_ = Image(height, width);
            for (double& v : at.noise_.pix) v = rng.uniform(-0.5, 0.5);
            break;
    }
    return at;
}

void DiffAttack::zero_noise() {
    for (double& v : noise_.pix) v = 0.0;
}

Image DiffAttack::forward(const Image& img) const {
    if (img.height != height_ || img.width != width_)
        throw ShapeError("attack realization was sampled for a different image shape");
    switch (spec_.kind) {
        case AttackSpec::Kind::identity: {
            return img;
        }
        case AttackSpec::Kind::gaussian_noise:
        case AttackSpec::Kind::uniform_noise: {
            Image out = img;
            for (std::size_t i = 0; i < out.size(); ++i) out.pix[i] += noise_.pix[i];
            return out;
        }
        case AttackSpec::Kind::salt_pepper: {
            Image out = img;
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (mask_[i] == 1) out.pix[i] = 0.0;
                else if (mask_[i] == 2) out.pix[i] = 255.0;
            }
            return out;
        }
        case AttackSpec::Kind::block_crop: {
            Image out = img;
            for (std::size_t i = 0; i < out.size(); ++i)
                if (mask_[i]) out.pix[i] = 0.0;
            return out;
        }
        case AttackSpec::Kind::smoothing: {
            const int a = static_cast<int>(spec_.value);
            if (a == 1) return img;
            return mean_filter_reflect(img, a);
        }
        case AttackSpec::Kind::jpeg_approx: {
            Image out(img.height, img.width);
            double block[64], coeffs[64];
            for (int y0 = 0; y0 < img.height; y0 += 8)
                for (int x0 = 0; x0 < img.width; x0 += 8) {
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x) block[y * 8 + x] = img.at(y0 + y, x0 + x) - 128.0;
                    jpeg_dct8x8(block, coeffs);
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            coeffs[y * 8 + x] +=
                                noise_.at(y0 + y, x0 + x) * quant_.values[y * 8 + x];
                    jpeg_idct8x8(coeffs, block);
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x) out.at(y0 + y, x0 + x) = block[y * 8 + x] + 128.0;
                }
            return out;
        }
    }
    return img;
}

Image DiffAttack::backward(const Image& grad_out) const {
    if (grad_out.height != height_ || grad_out.width != width_)
        throw ShapeError("attack backward: gradient shape mismatch");
    switch (spec_.kind) {
        case AttackSpec::Kind::identity:
        case AttackSpec::Kind::gaussian_noise:
        case AttackSpec::Kind::uniform_noise:
            return grad_out;
        case AttackSpec::Kind::jpeg_approx:
            // IDCT(DCT(x) + n) is x plus a constant: identity Jacobian.
            return grad_out;
        case AttackSpec::Kind::salt_pepper:
        case AttackSpec::Kind::block_crop: {
            Image g = grad_out;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (mask_[i]) g.pix[i] = 0.0;
            return g;
        }
        case AttackSpec::Kind::smoothing: {
            const int a = static_cast<int>(spec_.value);
            if (a == 1) return grad_out;
            return mean_filter_reflect_adjoint(grad_out, a);
        }
    }
    return grad_out;
}

Image jpeg_approx(const Image& img, int quality, RandomStream& rng) {
    AttackSpec spec{AttackSpec::Kind::jpeg_approx, static_cast<double>(quality)};
    return DiffAttack::make(spec, img.height, img.width, rng).forward(img);
}

// ---------------------------------------------------------------------------
// Real attack battery.

const char* real_attack_name(RealAttack kind) {
    switch (kind) {
        case RealAttack::identity: return "identity";
        case RealAttack::gaussian_noise: return "gaussian_noise";
        case RealAttack::salt_pepper: return "salt_pepper";
        case RealAttack::crop: return "crop";
        case RealAttack::grid_crop: return "grid_crop";
        case RealAttack::pattern_lines: return "pattern_lines";
        case RealAttack::jpeg: return "jpeg";
        case RealAttack::gaussian_blur: return "gaussian_blur";
        case RealAttack::sharpen: return "sharpen";
        case RealAttack::median: return "median";
        case RealAttack::resize: return "resize";
    }
    return "identity";
}

RealAttack real_attack_from_name(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(RealAttack::resize); ++k)
        if (name == real_attack_name(static_cast<RealAttack>(k))) return static_cast<RealAttack>(k);
    throw ConfigError("unknown attack: " + name);
}

namespace {

std::uint8_t round_u8(double v) {
    v = std::round(v);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

Image separable_filter_reflect(const Image& img, const std::vector<double>& k) {
    const int radius = static_cast<int>(k.size() / 2);
    Image tmp(img.height, img.width), out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += k[d + radius] * img.at(y, reflect(x + d, img.width));
            tmp.at(y, x) = s;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += k[d + radius] * tmp.at(reflect(y + d, img.height), x);
            out.at(y, x) = s;
        }
    return out;
}

Image gaussian_blur_f(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    return separable_filter_reflect(img, gaussian_kernel(sigma));
}

double bilinear_sample(const Image& img, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const double fy = y - y0, fx = x - x0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
}

Image bilinear_resize(const Image& img, int out_h, int out_w) {
    Image out(out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            out.at(y, x) = bilinear_sample(img, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
    return out;
}

}  // namespace

ImageU8 make_line_mask(int height, int width, int lines, int thickness) {
    if (lines < 0) throw ConfigError("line count must be >= 0");
    ImageU8 mask(height, width, 0);
    for (int i = 0; i < lines; ++i) {
        const int center = static_cast<int>((i + 1) * static_cast<double>(height) / (lines + 1));
        const int top = std::max(0, center - thickness / 2);
        const int bottom = std::min(height, top + thickness);
        for (int y = top; y < bottom; ++y)
            for (int x = 0; x < width; ++x) mask.at(y, x) = 255;
    }
    return mask;
}

ImageU8 apply_real_attack(const ImageU8& img, RealAttack kind, const RealAttackParams& params,
                          RandomStream& rng) {
    const int h = img.height, w = img.width;
    switch (kind) {
        case RealAttack::identity:
            return img;
        case RealAttack::gaussian_noise: {
            if (!(params.level >= 0.0)) throw ConfigError("noise sigma must be >= 0");
            ImageU8 out(h, w);
            for (std::size_t i = 0; i < img.pix.size(); ++i)
                out.pix[i] = round_u8(img.pix[i] + rng.normal(0.0, params.level));
            return out;
        }
        case RealAttack::salt_pepper: {
            const double p = params.level / 100.0;
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("salt & pepper percent out of range");
            ImageU8 out = img;
            for (auto& v : out.pix)
                if (rng.uniform() < p) v = rng.uniform() < 0.5 ? 0 : 255;
            return out;
        }
        case RealAttack::crop: {
            const double f = params.level / 100.0;
            if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("crop percent out of range");
            ImageU8 out = img;
            const int ch = std::min(h, static_cast<int>(std::lround(h * std::sqrt(f))));
            const int cw = std::min(w, static_cast<int>(std::lround(w * std::sqrt(f))));
            if (ch == 0 || cw == 0) return out;
            const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - ch + 1)));
            const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - cw + 1)));
            const std::uint8_t fill = round_u8(params.crop_fill);
            for (int y = y0; y < y0 + ch; ++y)
                for (int x = x0; x < x0 + cw; ++x) out.at(y, x) = fill;
            return out;
        }
        case RealAttack::grid_crop: {
            const double f = params.level / 100.0;
            if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("grid crop percent out of range");
            require_blocks8(h, w, "grid_crop");
            const int by = h / 8, bx = w / 8;
            const int total = by * bx;
            const int count = static_cast<int>(std::floor(f * total));
            std::vector<int> blocks(total);
            for (int i = 0; i < total; ++i) blocks[i] = i;
            for (int i = 0; i < count; ++i) {
                const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(total - i)));
                std::swap(blocks[i], blocks[j]);
            }
            ImageU8 out = img;
            const std::uint8_t fill = round_u8(params.crop_fill);
            for (int i = 0; i < count; ++i) {
                const int y0 = (blocks[i] / bx) * 8, x0 = (blocks[i] % bx) * 8;
                for (int y = y0; y < y0 + 8; ++y)
                    for (int x = x0; x < x0 + 8; ++x) out.at(y, x) = fill;
            }
            return out;
        }
        case RealAttack::pattern_lines: {
            ImageU8 generated;
            const ImageU8* mask = params.overlay_mask;
            if (mask == nullptr) {
                generated = make_line_mask(h, w, static_cast<int>(params.level));
                mask = &generated;
            }
            if (mask->height != h || mask->width != w)
                throw ShapeError("overlay mask dimensions do not match the image");
            ImageU8 out = img;
            for (std::size_t i = 0; i < out.pix.size(); ++i)
                if (mask->pix[i] != 0) out.pix[i] = 255;
            return out;
        }
        case RealAttack::jpeg: {
            require_blocks8(h, w, "jpeg");
            const QuantMatrix q = build_quant_matrix(static_cast<int>(params.level));
            ImageU8 out(h, w);
            double block[64], coeffs[64];
            for (int y0 = 0; y0 < h; y0 += 8)
                for (int x0 = 0; x0 < w; x0 += 8) {
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            block[y * 8 + x] = static_cast<double>(img.at(y0 + y, x0 + x)) - 128.0;
                    jpeg_dct8x8(block, coeffs);
                    for (int i = 0; i < 64; ++i)
                        coeffs[i] = std::round(coeffs[i] / q.values[i]) * q.values[i];
                    jpeg_idct8x8(coeffs, block);
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            out.at(y0 + y, x0 + x) = round_u8(block[y * 8 + x] + 128.0);
                }
            return out;
        }
        case RealAttack::gaussian_blur: {
            Image f = gaussian_blur_f(to_image(img), params.level);
            return to_u8(f);
        }
        case RealAttack::sharpen: {
            const Image src = to_image(img);
            const Image blur = gaussian_blur_f(src, params.level);
            Image out(h, w);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.pix[i] = src.pix[i] + (src.pix[i] - blur.pix[i]);
            return to_u8(out);
        }
        case RealAttack::median: {
            const int win = static_cast<int>(params.level);
            if (win < 1 || win % 2 == 0) throw ConfigError("median window must be odd and >= 1");
            const int r = win / 2;
            ImageU8 out(h, w);
            std::vector<std::uint8_t> buf(static_cast<std::size_t>(win) * win);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    std::size_t idx = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx)
                            buf[idx++] = img.at(reflect(y + dy, h), reflect(x + dx, w));
                    auto mid = buf.begin() + buf.size() / 2;
                    std::nth_element(buf.begin(), mid, buf.end());
                    out.at(y, x) = *mid;
                }
            return out;
        }
        case RealAttack::resize: {
            const double scale = params.level;
            if (!(scale > 0.0)) throw ConfigError("resize scale must be > 0");
            if (scale == 1.0) return img;
            const int ih = std::max(1, static_cast<int>(std::lround(h * scale)));
            const int iw = std::max(1, static_cast<int>(std::lround(w * scale)));
            const Image small = bilinear_resize(to_image(img), ih, iw);
            return to_u8(bilinear_resize(small, h, w));
        }
    }
    return img;
}

}  // namespace wm
