#pragma once

#include <vector>

#include "wm/tensor.hpp"

namespace wm {

enum class Activation { identity, elu, sigmoid };
enum class ConvKind { pointwise_1x1, circular_2x2 };

/// A convolution layer of one of the two kinds used by the networks.
/// pointwise_1x1 mixes channels at each spatial position; circular_2x2 also
/// taps the (row+1, col+1) neighbors with wrap-around indexing, so spatial
/// shape is always preserved and strides are always one.
struct ConvLayer {
    ConvKind kind = ConvKind::pointwise_1x1;
    int n_in = 0;
    int n_out = 0;
    Activation act = Activation::identity;
    std::vector<double> weights;  // [n_out][n_in][kh][kw]
    std::vector<double> bias;     // size n_out, or empty for no bias

    int kh() const { return kind == ConvKind::circular_2x2 ? 2 : 1; }
    int kw() const { return kh(); }
    int taps() const { return kh() * kw(); }
    std::size_t weight_count() const {
        return static_cast<std::size_t>(n_out) * n_in * taps();
    }
    bool has_bias() const { return !bias.empty(); }

    static ConvLayer make(ConvKind kind, int n_in, int n_out, Activation act, bool with_bias);
};

void apply_activation(double* p, std::size_t n, Activation act);

/// phi'(x) recovered from the layer output (valid for all three activations).
double activation_grad_from_output(double out, Activation act);

Tensor3 conv_forward(const Tensor3& input, const ConvLayer& layer);

struct ConvGrads {
    Tensor3 input;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Analytic gradients of conv_forward. `output` must be the tensor returned
/// by conv_forward for this (input, layer) pair; it supplies the activation
/// derivative without re-running the layer.
ConvGrads conv_backward(const Tensor3& input, const ConvLayer& layer, const Tensor3& output,
                        const Tensor3& grad_out);

}  // namespace wm
