#include "wm/networks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wm/errors.hpp"
#include "wm/rng.hpp"

namespace wm {

StrengthFactor::StrengthFactor(double v) : value(v) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError("strength factor must be finite and >= 0, got " + std::to_string(v));
}

namespace {

constexpr int kEmbedderWidth = 64;

// Pixel values are divided by this before entering either network, so the
// transform channels sit at unit scale next to the {0,1} watermark channel
// and the uniform fan-in/fan-out init starts the ELU stack in its linear
// region. The transform is linear, so this is a reparameterization of the
// same function family (absorbable into the first and last conv weights);
// raw-pixel inputs leave the stack saturated and untrainable at small
// iteration budgets.
constexpr double kPixelScale = 255.0;

Tensor3 scaled_block_tensor(const Image& img, int block_rows, int block_cols) {
    Image scaled(img.height, img.width);
    for (std::size_t i = 0; i < img.size(); ++i) scaled.pix[i] = img.pix[i] / kPixelScale;
    return space_to_depth(scaled, block_rows, block_cols);
}

void init_layer(ConvLayer& layer, RandomStream& rng) {
    const int fan_in = layer.n_in * layer.taps();
    const int fan_out = layer.n_out * layer.taps();
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = 0.0;
}

void check_transform(const TransformSpec& t) {
    if (t.n_basis != t.block_rows * t.block_cols)
        throw ConfigError("networks require n_basis == M*N transforms");
}

}  // namespace

std::pair<EmbedderParams, ExtractorParams> init_params(std::uint64_t seed,
                                                       const TransformSpec& transform) {
    check_transform(transform);
    const int mn = transform.n_basis;

    EmbedderParams emb;
    emb.transform = transform;
    emb.layers.push_back(
        ConvLayer::make(ConvKind::pointwise_1x1, mn + 1, kEmbedderWidth, Activation::elu, true));
    for (int i = 0; i < 3; ++i)
        emb.layers.push_back(ConvLayer::make(ConvKind::circular_2x2, kEmbedderWidth,
                                             kEmbedderWidth, Activation::elu, true));
    emb.layers.push_back(
        ConvLayer::make(ConvKind::circular_2x2, kEmbedderWidth, mn, Activation::identity, true));

    ExtractorParams ext;
    ext.transform = transform;
    ext.layers.push_back(
        ConvLayer::make(ConvKind::pointwise_1x1, mn, kEmbedderWidth, Activation::elu, true));
    for (int i = 0; i < 3; ++i)
        ext.layers.push_back(ConvLayer::make(ConvKind::circular_2x2, kEmbedderWidth,
                                             kEmbedderWidth, Activation::elu, true));
    ext.layers.push_back(
        ConvLayer::make(ConvKind::pointwise_1x1, kEmbedderWidth, 1, Activation::sigmoid, true));

    RandomStream rng(seed);
    for (auto& l : emb.layers) init_layer(l, rng);
    for (auto& l : ext.layers) init_layer(l, rng);
    return {std::move(emb), std::move(ext)};
}

void validate_architecture(const EmbedderParams& emb) {
    check_transform(emb.transform);
    const int mn = emb.transform.n_basis;
    if (emb.layers.size() != 5) throw ConfigError("embedder must have exactly 5 conv layers");
    if (emb.layers[0].kind != ConvKind::pointwise_1x1 || emb.layers[0].n_in != mn + 1)
        throw ConfigError("embedder layer 1 must be pointwise over MN+1 channels");
    for (int i = 1; i < 5; ++i)
        if (emb.layers[i].kind != ConvKind::circular_2x2)
            throw ConfigError("embedder layers 2-5 must be 2x2 circular");
    if (emb.layers[4].n_out != mn)
        throw ConfigError("embedder last layer must emit MN channels for the inverse transform");
}

void validate_architecture(const ExtractorParams& ext) {
    check_transform(ext.transform);
    if (ext.layers.size() != 5) throw ConfigError("extractor must have exactly 5 conv layers");
    if (ext.layers[0].kind != ConvKind::pointwise_1x1 || ext.layers[0].n_in != ext.transform.n_basis)
        throw ConfigError("extractor layer 1 must be pointwise over MN channels");
    const ConvLayer& last = ext.layers[4];
    if (last.kind != ConvKind::pointwise_1x1 || last.n_out != 1 || last.act != Activation::sigmoid)
        throw ConfigError("extractor head must be a single-neuron sigmoid 1x1 layer");
}

namespace {

Tensor3 concat_watermark(const Tensor3& transformed, const BitGrid& wm) {
    if (wm.height != transformed.height || wm.width != transformed.width)
        throw ShapeError("watermark grid " + std::to_string(wm.height) + "x" +
                         std::to_string(wm.width) + " does not match block grid " +
                         std::to_string(transformed.height) + "x" +
                         std::to_string(transformed.width));
    Tensor3 cat(transformed.channels + 1, transformed.height, transformed.width);
    std::copy(transformed.data.begin(), transformed.data.end(), cat.data.begin());
    double* wplane = cat.plane(transformed.channels);
    for (std::size_t i = 0; i < wm.size(); ++i) {
        const std::uint8_t b = wm.bits[i];
        if (b > 1) throw ConfigError("watermark bits must be 0 or 1");
        wplane[i] = static_cast<double>(b);
    }
    return cat;
}

}  // namespace

EmbedOutput embed_forward(const Image& cover, const BitGrid& watermark,
                          const EmbedderParams& params, StrengthFactor alpha, EmbedTape* tape) {
    validate_architecture(params);
    const int m = params.transform.block_rows;
    const int n = params.transform.block_cols;

    Tensor3 t = scaled_block_tensor(cover, m, n);
    Tensor3 transformed = apply_transform(t, params.transform, TransformDirection::forward);
    Tensor3 x = concat_watermark(transformed, watermark);

    EmbedTape local;
    EmbedTape& tp = tape ? *tape : local;
    tp.cover_transformed = transformed;
    tp.concat_input = x;
    tp.layer_out.clear();
    tp.layer_out.reserve(params.layers.size());

    const Tensor3* cur = &tp.concat_input;
    for (const ConvLayer& layer : params.layers) {
        tp.layer_out.push_back(conv_forward(*cur, layer));
        cur = &tp.layer_out.back();
    }

    tp.inverse_out = apply_transform(*cur, params.transform, TransformDirection::inverse);

    EmbedOutput out;
    out.residual = depth_to_space(tp.inverse_out, m, n);
    tp.residual = out.residual;

    tp.pre_clamp = Image(cover.height, cover.width);
    out.watermarked = Image(cover.height, cover.width);
    for (std::size_t i = 0; i < cover.size(); ++i) {
        const double v = cover.pix[i] + alpha.value * out.residual.pix[i];
        tp.pre_clamp.pix[i] = v;
        out.watermarked.pix[i] = std::min(255.0, std::max(0.0, v));
    }
    return out;
}

std::vector<LayerGrads> embed_backward(const Image& cover, const BitGrid& watermark,
                                       const EmbedderParams& params, StrengthFactor alpha,
                                       const EmbedTape& tape, const Image& grad_watermarked) {
    (void)watermark;
    if (!grad_watermarked.same_shape(cover)) throw ShapeError("embed_backward: shape mismatch");
    const int m = params.transform.block_rows;
    const int n = params.transform.block_cols;

    // Clamp passes gradient only where the pre-clamp value stayed in range.
    Image grad_residual(cover.height, cover.width);
    for (std::size_t i = 0; i < cover.size(); ++i) {
        const double pre = tape.pre_clamp.pix[i];
        const bool inside = pre >= 0.0 && pre <= 255.0;
        grad_residual.pix[i] = inside ? alpha.value * grad_watermarked.pix[i] : 0.0;
    }

    Tensor3 g = space_to_depth(grad_residual, m, n);  // adjoint of depth_to_space
    g = transform_backward(g, params.transform, TransformDirection::inverse);

    std::vector<LayerGrads> grads(params.layers.size());
    for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
        const Tensor3& input = li == 0 ? tape.concat_input : tape.layer_out[li - 1];
        ConvGrads cg = conv_backward(input, params.layers[li], tape.layer_out[li], g);
        grads[li].weights = std::move(cg.weights);
        grads[li].bias = std::move(cg.bias);
        g = std::move(cg.input);
    }
    // Gradient w.r.t. the concat input (cover path + watermark channel) is
    // not propagated further: the cover and the bits are inputs, not
    // parameters.
    return grads;
}

Image extract_forward(const Image& patch, const ExtractorParams& params, ExtractTape* tape) {
    validate_architecture(params);
    const int m = params.transform.block_rows;
    const int n = params.transform.block_cols;

    Tensor3 t = scaled_block_tensor(patch, m, n);
    ExtractTape local;
    ExtractTape& tp = tape ? *tape : local;
    tp.transformed = apply_transform(t, params.transform, TransformDirection::forward);
    tp.layer_out.clear();
    tp.layer_out.reserve(params.layers.size());

    const Tensor3* cur = &tp.transformed;
    for (const ConvLayer& layer : params.layers) {
        tp.layer_out.push_back(conv_forward(*cur, layer));
        cur = &tp.layer_out.back();
    }

    const Tensor3& head = *cur;
    Image probs(head.height, head.width);
    std::copy(head.data.begin(), head.data.end(), probs.pix.begin());
    return probs;
}

ExtractorBackwardResult extract_backward(const Image& patch, const ExtractorParams& params,
                                         const ExtractTape& tape, const Image& grad_probs) {
    (void)patch;
    const int m = params.transform.block_rows;
    const int n = params.transform.block_cols;
    const Tensor3& head = tape.layer_out.back();
    if (grad_probs.height != head.height || grad_probs.width != head.width)
        throw ShapeError("extract_backward: probability grid shape mismatch");

    Tensor3 g(1, head.height, head.width);
    std::copy(grad_probs.pix.begin(), grad_probs.pix.end(), g.data.begin());

    ExtractorBackwardResult res;
    res.layers.resize(params.layers.size());
    for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
        const Tensor3& input = li == 0 ? tape.transformed : tape.layer_out[li - 1];
        ConvGrads cg = conv_backward(input, params.layers[li], tape.layer_out[li], g);
        res.layers[li].weights = std::move(cg.weights);
        res.layers[li].bias = std::move(cg.bias);
        g = std::move(cg.input);
    }
    g = transform_backward(g, params.transform, TransformDirection::forward);
    res.grad_input = depth_to_space(g, m, n);  // adjoint of space_to_depth
    for (double& v : res.grad_input.pix) v /= kPixelScale;
    return res;
}

BitGrid threshold_bits(const Image& probs, double tau) {
    BitGrid bits(probs.height, probs.width);
    for (std::size_t i = 0; i < probs.size(); ++i) bits.bits[i] = probs.pix[i] >= tau ? 1 : 0;
    return bits;
}

}  // namespace wm
