#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "wm/attacks.hpp"
#include "wm/networks.hpp"
#include "wm/train.hpp"

namespace wm {

/// 64x64 redundant plane: the 32x32 watermark tiled 2x2, so each source bit
/// has four copies 256 pixels apart in the embedded image.
struct WatermarkPlane {
    BitGrid plane;

    /// Plane coordinates of the four copies of source bit (i, j).
    static std::array<std::pair<int, int>, 4> copies(int i, int j);
};

/// `wm` must be 32x32 (1024 bits).
WatermarkPlane build_redundant_plane(const BitGrid& wm);

/// Covers must be 512x512; larger inputs are center-cropped with a warning
/// on stderr, smaller ones are rejected. Each 32x32 sub-image is embedded
/// with its aligned 4x4 sub-plane; the result is rounded to 8-bit.
ImageU8 embed_image(const ImageU8& cover, const BitGrid& wm, const EmbedderParams& params,
                    StrengthFactor alpha);

struct ExtractImageResult {
    BitGrid bits;       // 32x32 recovered watermark
    Image plane_probs;  // 64x64 per-copy probabilities
};

/// Voting: per source bit the four copy probabilities are summed and
/// thresholded at 2.0. `hard_vote` switches to majority over thresholded
/// copies (ties round up) for comparison.
ExtractImageResult extract_image(const ImageU8& image, const ExtractorParams& params,
                                 bool hard_vote = false);

/// Fraction of differing bits.
double ber(const BitGrid& a, const BitGrid& b);

/// 10*log10(W*H*255^2 / sum |I - Iw|^2); +infinity for identical images.
double psnr(const Image& a, const Image& b);
double psnr(const ImageU8& a, const ImageU8& b);

/// Difference between embedding a single-1 watermark at (bit_i, bit_j) and
/// the all-zero watermark on a constant-128 cover patch, alpha = 1.
Image diffusion_pattern(const EmbedderParams& params, int bit_i, int bit_j);

/// Per-block watermark-domain DCT magnitudes of a 32x32 pattern, accumulated
/// over the 16 blocks and emitted in JPEG zigzag order (64 values).
std::vector<double> frequency_energy_curve(const Image& pattern);

/// The standard 8x8 zigzag scan as (row, col) pairs.
const std::array<std::pair<int, int>, 64>& zigzag_order_8x8();

struct AttackGridEntry {
    RealAttack kind;
    std::vector<double> levels;
};

/// The attack battery used for the headline robustness tables.
std::vector<AttackGridEntry> default_attack_grid();

struct EvalRow {
    std::string image;
    double alpha = 1.0;
    std::string attack;
    double level = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double ber = 0.0;
};

struct EvaluationReport {
    std::vector<EvalRow> rows;

    void write_csv(std::ostream& os) const;
    /// Mean-over-images grid, one table per alpha.
    std::string summary() const;
};

/// For every (image, alpha): embed `wm_trials` random watermarks, average
/// PSNR/SSIM over the watermarked images; for every (attack, level): attack
/// each watermarked image, extract, and average BER over the trials.
/// Deterministic given `seed`; failures on individual images propagate as
/// exceptions from image loading, not from this function.
EvaluationReport evaluate_grid(const std::vector<std::pair<std::string, ImageU8>>& images,
                               const EmbedderParams& emb, const ExtractorParams& ext,
                               const std::vector<double>& alphas,
                               const std::vector<AttackGridEntry>& grid, int wm_trials,
                               std::uint64_t seed);

}  // namespace wm
