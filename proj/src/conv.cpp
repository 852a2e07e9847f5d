#include "wm/conv.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "wm/errors.hpp"
#include "wm/kernels.hpp"

namespace wm {

ConvLayer ConvLayer::make(ConvKind kind, int n_in, int n_out, Activation act, bool with_bias) {
    ConvLayer l;
    l.kind = kind;
    l.n_in = n_in;
    l.n_out = n_out;
    l.act = act;
    l.weights.assign(static_cast<std::size_t>(n_out) * n_in * l.taps(), 0.0);
    if (with_bias) l.bias.assign(n_out, 0.0);
    return l;
}

void apply_activation(double* p, std::size_t n, Activation act) {
    switch (act) {
        case Activation::identity:
            return;
        case Activation::elu:
            for (std::size_t i = 0; i < n; ++i)
                if (p[i] < 0.0) p[i] = std::expm1(p[i]);
            return;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
            return;
    }
}

double activation_grad_from_output(double out, Activation act) {
    switch (act) {
        case Activation::identity:
            return 1.0;
        case Activation::elu:
            // out = e^x - 1 on the negative side, so phi' = e^x = out + 1.
            return out < 0.0 ? out + 1.0 : 1.0;
        case Activation::sigmoid:
            return out * (1.0 - out);
    }
    return 1.0;
}

namespace {

void check_input(const Tensor3& input, const ConvLayer& layer) {
    if (input.channels != layer.n_in)
        throw ShapeError("conv: layer expects " + std::to_string(layer.n_in) + " channels, got " +
                         std::to_string(input.channels));
    if (layer.weights.size() != layer.weight_count()) throw ShapeError("conv: bad weight buffer size");
    if (layer.has_bias() && static_cast<int>(layer.bias.size()) != layer.n_out)
        throw ShapeError("conv: bad bias buffer size");
}

// Circularly shifted copies of every input plane, ordered (ci, dr, dc) to
// line up with the [n_out][n_in][kh][kw] weight layout, so the whole circular
// conv is a single gemm against a [n_out x 4*n_in] weight matrix.
std::vector<double> expand_circular(const Tensor3& in) {
    const int h = in.height, w = in.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> xcol(static_cast<std::size_t>(in.channels) * 4 * plane);
    for (int ci = 0; ci < in.channels; ++ci) {
        const double* src = in.plane(ci);
        for (int dr = 0; dr < 2; ++dr) {
            for (int dc = 0; dc < 2; ++dc) {
                double* dst = xcol.data() + ((static_cast<std::size_t>(ci) * 2 + dr) * 2 + dc) * plane;
                for (int y = 0; y < h; ++y) {
                    const int sy = (y + dr) % h;
                    const double* srow = src + static_cast<std::size_t>(sy) * w;
                    double* drow = dst + static_cast<std::size_t>(y) * w;
                    if (dc == 0) {
                        std::memcpy(drow, srow, sizeof(double) * w);
                    } else {
                        for (int x = 0; x < w - 1; ++x) drow[x] = srow[x + 1];
                        drow[w - 1] = srow[0];
                    }
                }
            }
        }
    }
    return xcol;
}

void init_preactivation(Tensor3& out, const ConvLayer& layer) {
    if (!layer.has_bias()) return;
    for (int co = 0; co < layer.n_out; ++co) {
        double* p = out.plane(co);
        const double b = layer.bias[co];
        for (int i = 0, s = out.plane_size(); i < s; ++i) p[i] = b;
    }
}

}  // namespace

Tensor3 conv_forward(const Tensor3& input, const ConvLayer& layer) {
    check_input(input, layer);
    const auto& ops = kernels::active();
    const int s = input.plane_size();
    Tensor3 out(layer.n_out, input.height, input.width);
    init_preactivation(out, layer);
    if (layer.kind == ConvKind::pointwise_1x1) {
        ops.gemm_acc(layer.weights.data(), input.data.data(), out.data.data(), layer.n_out,
                     layer.n_in, s);
    } else {
        const std::vector<double> xcol = expand_circular(input);
        ops.gemm_acc(layer.weights.data(), xcol.data(), out.data.data(), layer.n_out,
                     layer.n_in * 4, s);
    }
    apply_activation(out.data.data(), out.size(), layer.act);
    return out;
}

ConvGrads conv_backward(const Tensor3& input, const ConvLayer& layer, const Tensor3& output,
                        const Tensor3& grad_out) {
    check_input(input, layer);
    if (!output.same_shape(grad_out) || output.channels != layer.n_out ||
        output.height != input.height || output.width != input.width)
        throw ShapeError("conv_backward: inconsistent shapes");

    const auto& ops = kernels::active();
    const int s = input.plane_size();

    // Pre-activation gradient.
    Tensor3 gpre(layer.n_out, input.height, input.width);
    for (std::size_t i = 0; i < gpre.size(); ++i)
        gpre.data[i] = grad_out.data[i] * activation_grad_from_output(output.data[i], layer.act);

    ConvGrads g;
    g.weights.assign(layer.weights.size(), 0.0);
    if (layer.has_bias()) {
        g.bias.assign(layer.n_out, 0.0);
        for (int co = 0; co < layer.n_out; ++co) {
            const double* p = gpre.plane(co);
            double acc = 0.0;
            for (int i = 0; i < s; ++i) acc += p[i];
            g.bias[co] = acc;
        }
    }

    g.input = Tensor3(layer.n_in, input.height, input.width);
    if (layer.kind == ConvKind::pointwise_1x1) {
        ops.gemm_abt_acc(gpre.data.data(), input.data.data(), g.weights.data(), layer.n_out, s,
                         layer.n_in);
        ops.gemm_atb_acc(layer.weights.data(), gpre.data.data(), g.input.data.data(), layer.n_out,
                         layer.n_in, s);
        return g;
    }

    const std::vector<double> xcol = expand_circular(input);
    ops.gemm_abt_acc(gpre.data.data(), xcol.data(), g.weights.data(), layer.n_out, s,
                     layer.n_in * 4);

    // Gradient w.r.t. the expanded input, then fold the shifted copies back
    // (adjoint of the gather in expand_circular).
    std::vector<double> gxcol(static_cast<std::size_t>(layer.n_in) * 4 * s, 0.0);
    ops.gemm_atb_acc(layer.weights.data(), gpre.data.data(), gxcol.data(), layer.n_out,
                     layer.n_in * 4, s);
    const int h = input.height, w = input.width;
    for (int ci = 0; ci < layer.n_in; ++ci) {
        double* dst = g.input.plane(ci);
        for (int dr = 0; dr < 2; ++dr) {
            for (int dc = 0; dc < 2; ++dc) {
                const double* src =
                    gxcol.data() + ((static_cast<std::size_t>(ci) * 2 + dr) * 2 + dc) * s;
                for (int y = 0; y < h; ++y) {
                    const int ty = (y + dr) % h;
                    const double* srow = src + static_cast<std::size_t>(y) * w;
                    double* drow = dst + static_cast<std::size_t>(ty) * w;
                    if (dc == 0) {
                        for (int x = 0; x < w; ++x) drow[x] += srow[x];
                    } else {
                        for (int x = 0; x < w - 1; ++x) drow[x + 1] += srow[x];
                        drow[0] += srow[w - 1];
                    }
                }
            }
        }
    }
    return g;
}

}  // namespace wm
