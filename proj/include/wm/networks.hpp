#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wm/conv.hpp"
#include "wm/tensor.hpp"
#include "wm/transforms.hpp"

namespace wm {

/// Scalar multiplying the residual before the skip-connection add. Fixed to
/// one during training; tunable on a trained network to trade imperceptibility
/// against robustness.
struct StrengthFactor {
    double value = 1.0;
    explicit StrengthFactor(double v);
};

/// Embedder: transform -> concat watermark channel -> 1x1 conv (MN+1 -> 64,
/// ELU) -> three 2x2 circular convs (64 -> 64, ELU) -> 2x2 circular conv
/// (64 -> MN, identity) -> inverse transform -> residual added to the cover.
struct EmbedderParams {
    TransformSpec transform;      // fixed, non-trainable
    std::vector<ConvLayer> layers;  // exactly 5
};

/// Extractor: transform -> 1x1 conv (64 -> 64, ELU) -> three 2x2 circular
/// convs (64 -> 64, ELU) -> 1x1 conv (64 -> 1, sigmoid).
struct ExtractorParams {
    TransformSpec transform;
    std::vector<ConvLayer> layers;  // exactly 5
};

/// Fresh parameter sets for the fixed architectures. Weights are i.i.d.
/// uniform in +/- sqrt(6 / (fan_in + fan_out)); biases start at zero.
/// Deterministic given the seed.
std::pair<EmbedderParams, ExtractorParams> init_params(std::uint64_t seed,
                                                       const TransformSpec& transform);

void validate_architecture(const EmbedderParams& emb);
void validate_architecture(const ExtractorParams& ext);

/// Intermediate activations of one embedder run, kept for the backward pass.
struct EmbedTape {
    Tensor3 cover_transformed;       // transform output before concat
    Tensor3 concat_input;            // transform channels + watermark channel
    std::vector<Tensor3> layer_out;  // per conv layer
    Tensor3 inverse_out;             // after the inverse transform
    Image residual;
    Image pre_clamp;                 // cover + alpha * residual before clamping
};

struct EmbedOutput {
    Image watermarked;  // clamped to [0, 255]
    Image residual;
};

/// Covers are pixel-valued grids with dimensions divisible by (M, N); the
/// watermark grid must match the block grid and contain 0/1 values, entering
/// the network as one extra channel.
EmbedOutput embed_forward(const Image& cover, const BitGrid& watermark,
                          const EmbedderParams& params, StrengthFactor alpha,
                          EmbedTape* tape = nullptr);

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Gradients of all trainable embedder layers given dL/d(watermarked).
std::vector<LayerGrads> embed_backward(const Image& cover, const BitGrid& watermark,
                                       const EmbedderParams& params, StrengthFactor alpha,
                                       const EmbedTape& tape, const Image& grad_watermarked);

struct ExtractTape {
    Tensor3 transformed;
    std::vector<Tensor3> layer_out;
};

/// Probability grid (one value per block) in (0, 1).
Image extract_forward(const Image& patch, const ExtractorParams& params,
                      ExtractTape* tape = nullptr);

struct ExtractorBackwardResult {
    std::vector<LayerGrads> layers;
    Image grad_input;  // dL/d(input patch)
};

ExtractorBackwardResult extract_backward(const Image& patch, const ExtractorParams& params,
                                         const ExtractTape& tape, const Image& grad_probs);

/// bit = 1 iff prob >= tau.
BitGrid threshold_bits(const Image& probs, double tau = 0.5);

}  // namespace wm
