#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wm/attacks.hpp"
#include "wm/dataset.hpp"
#include "wm/networks.hpp"
#include "wm/optimizer.hpp"
#include "wm/rng.hpp"

namespace wm {

struct TrainConfig {
    int block_rows = 8;   // M
    int block_cols = 8;   // N
    int patch_h = 32;     // H
    int patch_w = 32;     // W
    int wm_h = 4;         // h
    int wm_w = 4;         // w
    std::string transform_name = "dct";  // dct | hadamard
    long iterations = 20000;
    double learning_rate = 1e-4;
    double momentum = 0.98;
    double gamma = 0.5;
    int batch_size = 32;
    std::uint64_t seed = 1;
    AttackMixture mixture{{{AttackSpec{}, 1.0}}};
    double ssim_c1 = 1e-4;
    double ssim_c2 = 9e-4;
    int threads = 0;  // 0 = one per hardware thread, capped at batch_size
    long checkpoint_every = 0;  // 0 = final checkpoint only
    long log_every = 100;
    std::vector<std::string> data_sources;
    int dataset_patches = 1024;
    int dataset_bins = 8;
    std::string preset;  // informational

    void validate() const;
};

/// Named configurations: "gt-net" (gaussian sigma=3, gamma=0.75), "jt-net"
/// (jpeg quality=70, gamma=0.75), "mt-net" (four-attack mixture, gamma=0.5)
/// and "overfit" (64 fixed synthetic patches, identity attack, gamma=0.5).
/// Iteration counts default to desk scale and can be overridden.
TrainConfig preset_config(const std::string& name);

/// Canonical key=value rendering; fixed key order, doubles at full precision.
/// This exact text is embedded in checkpoints and logs.
std::string canonical_config_text(const TrainConfig& config);
TrainConfig parse_config_text(const std::string& text);

TransformSpec build_transform(const TrainConfig& config);

struct Checkpoint {
    std::uint32_t version = 1;
    TrainConfig config;
    EmbedderParams embedder;
    ExtractorParams extractor;
    MomentumState momentum;
    std::uint64_t iteration = 0;
    std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainLogRow {
    long iteration = 0;
    double loss = 0, ssim = 0, bce = 0, ber = 0;
    double wall_seconds = 0;
};

struct TrainHooks {
    std::function<void(const TrainLogRow&)> on_log;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

/// Per iteration: sample a batch of patches and fresh random watermarks,
/// embed at alpha=1, push every item through one attack drawn from the
/// mixture, extract, and take an SGD-momentum step on
/// gamma*(1-SSIM) + (1-gamma)*BCE. Bit-deterministic given the seed; batch
/// items may run on worker threads but gradients reduce in item order.
Checkpoint train(const TrainConfig& config, const PatchDataset& data, RandomStream& rng,
                 const TrainHooks& hooks = {});

/// One forward pass of the full chain for a single item; used by training,
/// gradient checking, and the evaluation of training-set metrics.
struct PipelineResult {
    double ssim_value = 0;
    double bce_value = 0;
    double loss = 0;
    Image watermarked;
    Image attacked;
    Image probs;
};

PipelineResult run_pipeline(const Image& cover, const BitGrid& bits, const EmbedderParams& emb,
                            const ExtractorParams& ext, const DiffAttack& attack, double gamma,
                            double ssim_c1, double ssim_c2, EmbedTape* etape = nullptr,
                            ExtractTape* xtape = nullptr);

}  // namespace wm
