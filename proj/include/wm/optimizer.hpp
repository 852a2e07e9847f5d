#pragma once

#include <span>
#include <vector>

#include "wm/networks.hpp"

namespace wm {

/// Classical momentum: v <- mo * v + g; w <- w - lr * v.
/// Throws NumericError when a gradient entry is non-finite; the parameter
/// buffer is untouched in that case.
void sgd_momentum_step(std::span<double> weights, std::span<const double> grads,
                       std::span<double> velocity, double lr, double mo);

/// Mutable views over every trainable tensor of both networks, in the fixed
/// order embedder L1..L5 (weights, bias), then extractor L1..L5. Momentum
/// buffers and serialized optimizer state follow this order.
std::vector<std::span<double>> trainable_tensors(EmbedderParams& emb, ExtractorParams& ext);

struct MomentumState {
    std::vector<std::vector<double>> buffers;

    static MomentumState zeros_like(EmbedderParams& emb, ExtractorParams& ext);
};

}  // namespace wm
