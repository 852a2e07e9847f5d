#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "wm/errors.hpp"
#include "wm/losses.hpp"
#include "wm/train.hpp"

namespace wm {

PipelineResult run_pipeline(const Image& cover, const BitGrid& bits, const EmbedderParams& emb,
                            const ExtractorParams& ext, const DiffAttack& attack, double gamma,
                            double ssim_c1, double ssim_c2, EmbedTape* etape, ExtractTape* xtape) {
    PipelineResult r;
    const StrengthFactor alpha(1.0);  // fixed to one during training
    EmbedOutput eo = embed_forward(cover, bits, emb, alpha, etape);
    r.watermarked = std::move(eo.watermarked);
    r.attacked = attack.forward(r.watermarked);
    r.probs = extract_forward(r.attacked, ext, xtape);
    r.ssim_value = ssim(cover, r.watermarked, ssim_c1, ssim_c2);
    r.bce_value = bce_loss(r.probs, bits);
    r.loss = combined_loss(r.ssim_value, r.bce_value, gamma);
    return r;
}

namespace {

struct ItemGrads {
    std::vector<LayerGrads> embedder;
    std::vector<LayerGrads> extractor;
    PipelineResult forward;
    long bit_errors = 0;
};

// Forward + backward for one batch item. The attack realization is frozen
// inside `attack`, so gradients see exactly the noise the forward pass saw.
ItemGrads run_item(const Image& cover, const BitGrid& bits, const EmbedderParams& emb,
                   const ExtractorParams& ext, const DiffAttack& attack, const TrainConfig& cfg) {
    ItemGrads item;
    EmbedTape etape;
    ExtractTape xtape;
    item.forward = run_pipeline(cover, bits, emb, ext, attack, cfg.gamma, cfg.ssim_c1, cfg.ssim_c2,
                                &etape, &xtape);

    // Extraction-loss path: (1-gamma) * dBCE flows through extractor and
    // attack into the embedder.
    Image grad_probs = bce_backward(item.forward.probs, bits);
    for (double& g : grad_probs.pix) g *= 1.0 - cfg.gamma;
    ExtractorBackwardResult xres = extract_backward(item.forward.attacked, ext, xtape, grad_probs);
    item.extractor = std::move(xres.layers);

    Image grad_wm = attack.backward(xres.grad_input);

    // Imperceptibility path: gamma * d(1 - SSIM) applies to the watermarked
    // image directly.
    const Image ssim_grad = ssim_backward(cover, item.forward.watermarked, cfg.ssim_c1, cfg.ssim_c2);
    for (std::size_t i = 0; i < grad_wm.size(); ++i)
        grad_wm.pix[i] -= cfg.gamma * ssim_grad.pix[i];

    item.embedder =
        embed_backward(cover, bits, emb, StrengthFactor(1.0), etape, grad_wm);

    const BitGrid decoded = threshold_bits(item.forward.probs);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (decoded.bits[i] != bits.bits[i]) ++item.bit_errors;
    return item;
}

void accumulate(std::vector<double>& acc, const std::vector<double>& g) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

}  // namespace

Checkpoint train(const TrainConfig& config, const PatchDataset& data, RandomStream& rng,
                 const TrainHooks& hooks) {
    config.validate();
    if (data.patches.empty()) throw ConfigError("train: dataset is empty");
    for (const Image& p : data.patches)
        if (p.height != config.patch_h || p.width != config.patch_w)
            throw ShapeError("train: dataset patch size does not match the config");

    const TransformSpec transform = build_transform(config);
    auto [emb, ext] = init_params(rng.next_u64(), transform);
    MomentumState momentum = MomentumState::zeros_like(emb, ext);

    auto tensors = trainable_tensors(emb, ext);
    std::vector<std::vector<double>> grad_acc;
    grad_acc.reserve(tensors.size());
    for (auto view : tensors) grad_acc.emplace_back(view.size(), 0.0);

    const int batch = config.batch_size;
    int threads = config.threads;
    if (threads == 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, batch));

    const auto t_start = std::chrono::steady_clock::now();

    Checkpoint ckpt;
    ckpt.config = config;
    auto fill_checkpoint = [&](long iter_done) {
        ckpt.embedder = emb;
        ckpt.extractor = ext;
        ckpt.momentum = momentum;
        ckpt.iteration = static_cast<std::uint64_t>(iter_done);
        ckpt.rng_state = rng.save_state();
    };

    std::vector<std::size_t> batch_idx(batch);
    std::vector<BitGrid> batch_bits(batch);
    std::vector<DiffAttack> batch_attack;
    std::vector<ItemGrads> items(batch);

    for (long iter = 0; iter < config.iterations; ++iter) {
        // All randomness is drawn up front on this thread, in item order, so
        // results do not depend on the worker count.
        for (int b = 0; b < batch; ++b) batch_idx[b] = rng.below(data.patches.size());
        const AttackSpec attack_spec = config.mixture.entries[sample_attack(config.mixture, rng)].first;
        for (int b = 0; b < batch; ++b) {
            BitGrid bits(config.wm_h, config.wm_w);
            for (auto& v : bits.bits) v = rng.bernoulli(0.5) ? 1 : 0;
            batch_bits[b] = std::move(bits);
        }
        batch_attack.clear();
        for (int b = 0; b < batch; ++b)
            batch_attack.push_back(DiffAttack::make(attack_spec, config.patch_h, config.patch_w, rng));

        auto worker = [&](int first, int last) {
            for (int b = first; b < last; ++b)
                items[b] = run_item(data.patches[batch_idx[b]], batch_bits[b], emb, ext,
                                    batch_attack[b], config);
        };
        if (threads == 1) {
            worker(0, batch);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(threads - 1);
            for (int t = 1; t < threads; ++t)
                pool.emplace_back(worker, batch * t / threads, batch * (t + 1) / threads);
            worker(0, batch / threads);
            for (auto& th : pool) th.join();
        }

        // Reduce in item order (worker-count invariant), then average.
        for (auto& g : grad_acc) std::fill(g.begin(), g.end(), 0.0);
        double loss_sum = 0, ssim_sum = 0, bce_sum = 0;
        long bit_errors = 0;
        for (int b = 0; b < batch; ++b) {
            const ItemGrads& item = items[b];
            std::size_t t = 0;
            for (const LayerGrads& lg : item.embedder) {
                accumulate(grad_acc[t++], lg.weights);
                if (!lg.bias.empty()) accumulate(grad_acc[t++], lg.bias);
            }
            for (const LayerGrads& lg : item.extractor) {
                accumulate(grad_acc[t++], lg.weights);
                if (!lg.bias.empty()) accumulate(grad_acc[t++], lg.bias);
            }
            loss_sum += item.forward.loss;
            ssim_sum += item.forward.ssim_value;
            bce_sum += item.forward.bce_value;
            bit_errors += item.bit_errors;
        }
        if (!std::isfinite(loss_sum))
            throw NumericError("train: loss diverged at iteration " + std::to_string(iter));

        const double inv_batch = 1.0 / batch;
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            for (double& g : grad_acc[t]) g *= inv_batch;
            sgd_momentum_step(tensors[t], grad_acc[t], momentum.buffers[t], config.learning_rate,
                              config.momentum);
        }

        const long done = iter + 1;
        if (hooks.on_log && (done % std::max(1L, config.log_every) == 0 || done == config.iterations)) {
            TrainLogRow row;
            row.iteration = done;
            row.loss = loss_sum * inv_batch;
            row.ssim = ssim_sum * inv_batch;
            row.bce = bce_sum * inv_batch;
            row.ber = static_cast<double>(bit_errors) /
                      (static_cast<double>(batch) * config.wm_h * config.wm_w);
            row.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            hooks.on_log(row);
        }
        if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
            done % config.checkpoint_every == 0 && done != config.iterations) {
            fill_checkpoint(done);
            hooks.on_checkpoint(ckpt);
        }
    }

    fill_checkpoint(config.iterations);
    return ckpt;
}

}  // namespace wm
