#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wm/rng.hpp"
#include "wm/tensor.hpp"

namespace wm {

/// One channel distortion, parameterized in 0-255 pixel units.
struct AttackSpec {
    enum class Kind {
        identity,
        gaussian_noise,  // sigma
        uniform_noise,   // value: noise uniform in [-value, value]
        salt_pepper,     // value: total corrupted-pixel probability
        block_crop,      // value: fraction of 8x8 blocks suppressed
        smoothing,       // value: odd mask size a (mean filter 1/a^2)
        jpeg_approx,     // value: quality factor in [1, 100]
    };
    Kind kind = Kind::identity;
    double value = 0.0;

    std::string to_string() const;
    static AttackSpec parse(const std::string& text);
    void validate() const;
};

/// Roulette-wheel mixture: per training iteration exactly one entry is drawn.
struct AttackMixture {
    std::vector<std::pair<AttackSpec, double>> entries;

    void validate() const;  // probabilities >= 0 summing to 1 within 1e-9
    std::string to_string() const;
    static AttackMixture parse(const std::string& text);
};

/// Index of the drawn entry; deterministic given the rng state.
std::size_t sample_attack(const AttackMixture& mix, RandomStream& rng);

/// JPEG luminance quantization matrix for a quality factor: base table scaled
/// by S = quality < 50 ? 5000/quality : 200 - 2*quality, entries
/// clamp(floor((base*S + 50)/100), 1, 255).
struct QuantMatrix {
    int quality = 50;
    std::array<int, 64> values{};  // row-major 8x8
};
QuantMatrix build_quant_matrix(int quality);

/// A differentiable attack with its random realization (noise plane, crop
/// mask, ...) sampled at construction and frozen, so the same object serves
/// the forward pass, the backward pass, and finite-difference re-evaluation.
class DiffAttack {
public:
    static DiffAttack make(const AttackSpec& spec, int height, int width, RandomStream& rng);

    Image forward(const Image& img) const;
    Image backward(const Image& grad_out) const;

    const AttackSpec& spec() const { return spec_; }

    /// Test hook: zero the frozen noise of noise-driven attacks.
    void zero_noise();

private:
    AttackSpec spec_;
    int height_ = 0, width_ = 0;
    Image noise_;                     // gaussian/uniform/jpeg (DCT-domain) noise
    std::vector<std::uint8_t> mask_;  // salt_pepper: 0 keep, 1 -> 0, 2 -> 255; block_crop: per-pixel suppress
    QuantMatrix quant_;
};

/// Evaluation-time attacks on stored 8-bit images.
enum class RealAttack {
    identity,
    gaussian_noise,   // sigma
    salt_pepper,      // percent of pixels
    crop,             // percent of pixels, one contiguous square region
    grid_crop,        // percent of 8x8 blocks
    pattern_lines,    // number of horizontal overlay bands
    jpeg,             // quality factor
    gaussian_blur,    // radius (Gaussian sigma)
    sharpen,          // unsharp-mask radius
    median,           // window size
    resize,           // scale down/up round trip, bilinear
};

const char* real_attack_name(RealAttack kind);
RealAttack real_attack_from_name(const std::string& name);

struct RealAttackParams {
    double level = 0.0;
    const ImageU8* overlay_mask = nullptr;  // pattern attack: nonzero pixels overwrite with 255
    double crop_fill = 0.0;
};

ImageU8 apply_real_attack(const ImageU8& img, RealAttack kind, const RealAttackParams& params,
                          RandomStream& rng);

/// Straight horizontal bands, the built-in stand-in for text overlays.
ImageU8 make_line_mask(int height, int width, int lines, int thickness = 12);

/// Orthonormal 8x8 DCT-II pair used by the JPEG paths (independent of the
/// watermarking transform layer; quantization tables assume this scaling).
void jpeg_dct8x8(const double* block, double* coeffs);
void jpeg_idct8x8(const double* coeffs, double* block);

/// Differentiable JPEG model applied standalone (dims divisible by 8).
Image jpeg_approx(const Image& img, int quality, RandomStream& rng);

}  // namespace wm
