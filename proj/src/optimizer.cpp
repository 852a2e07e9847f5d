#include "wm/optimizer.hpp"

#include <cmath>

#include "wm/errors.hpp"

namespace wm {

void sgd_momentum_step(std::span<double> weights, std::span<const double> grads,
                       std::span<double> velocity, double lr, double mo) {
    if (weights.size() != grads.size() || weights.size() != velocity.size())
        throw ShapeError("sgd_momentum_step: buffer size mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericError("sgd_momentum_step: non-finite gradient");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        velocity[i] = mo * velocity[i] + grads[i];
        weights[i] -= lr * velocity[i];
    }
}

std::vector<std::span<double>> trainable_tensors(EmbedderParams& emb, ExtractorParams& ext) {
    std::vector<std::span<double>> out;
    auto add = [&out](std::vector<ConvLayer>& layers) {
        for (ConvLayer& l : layers) {
            out.emplace_back(l.weights);
            if (l.has_bias()) out.emplace_back(l.bias);
        }
    };
    add(emb.layers);
    add(ext.layers);
    return out;
}

MomentumState MomentumState::zeros_like(EmbedderParams& emb, ExtractorParams& ext) {
    MomentumState st;
    for (auto view : trainable_tensors(emb, ext)) st.buffers.emplace_back(view.size(), 0.0);
    return st;
}

}  // namespace wm
