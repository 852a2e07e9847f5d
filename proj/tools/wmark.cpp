// wmark: train / embed / extract / evaluate / analyze / gradcheck front end
// for the blind watermarking toolkit.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wm/diag.hpp"
#include "wm/errors.hpp"
#include "wm/imageio.hpp"
#include "wm/kernels.hpp"
#include "wm/losses.hpp"
#include "wm/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

namespace fs = std::filesystem;

std::string out_path(const std::string& name) {
    if (name.find('/') != std::string::npos) return name;
    if (const char* dir = std::getenv("WMARK_OUT_DIR"); dir != nullptr && dir[0] != '\0') {
        fs::create_directories(dir);
        return (fs::path(dir) / name).string();
    }
    return name;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        if (next > pos) out.push_back(std::stod(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty()) throw wm::ConfigError("expected a comma-separated list of numbers");
    return out;
}

// "gaussian_noise:5,15,25;jpeg:90,70,50" -> attack grid
std::vector<wm::AttackGridEntry> parse_attack_grid(const std::string& text) {
    std::vector<wm::AttackGridEntry> grid;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(';', pos);
        if (next == std::string::npos) next = text.size();
        if (next > pos) {
            const std::string item = text.substr(pos, next - pos);
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw wm::ConfigError("attack grid entries look like kind:level1,level2");
            wm::AttackGridEntry entry;
            entry.kind = wm::real_attack_from_name(item.substr(0, colon));
            entry.levels = parse_double_list(item.substr(colon + 1));
            grid.push_back(std::move(entry));
        }
        pos = next + 1;
    }
    if (grid.empty()) throw wm::ConfigError("empty attack grid");
    return grid;
}

wm::BitGrid random_watermark(std::uint64_t seed) {
    wm::RandomStream rng(seed);
    wm::BitGrid wm(32, 32);
    for (auto& b : wm.bits) b = rng.bernoulli(0.5) ? 1 : 0;
    return wm;
}

struct TrainCli {
    std::string preset;
    std::string config_path;
    std::string out = "checkpoint.ckpt";
    std::string log_path;
    std::vector<std::string> data;
    long long seed = -1;
    long long iterations = -1;
    int batch = -1;
    double lr = -1, momentum = -1, gamma = -1;
    int threads = -1;
    long long checkpoint_every = -1;
    std::string transform;
    std::string mixture;
};

int cmd_train(const TrainCli& cli) {
    wm::TrainConfig cfg;
    if (!cli.preset.empty()) {
        cfg = wm::preset_config(cli.preset);
    } else if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw wm::IoError("cannot open config file " + cli.config_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        cfg = wm::parse_config_text(text);
    } else {
        throw wm::ConfigError("train needs --preset or --config");
    }
    if (cli.seed >= 0) cfg.seed = static_cast<std::uint64_t>(cli.seed);
    if (cli.iterations >= 0) cfg.iterations = cli.iterations;
    if (cli.batch > 0) cfg.batch_size = cli.batch;
    if (cli.lr > 0) cfg.learning_rate = cli.lr;
    if (cli.momentum >= 0) cfg.momentum = cli.momentum;
    if (cli.gamma >= 0) cfg.gamma = cli.gamma;
    if (cli.threads >= 0) cfg.threads = cli.threads;
    if (cli.checkpoint_every >= 0) cfg.checkpoint_every = cli.checkpoint_every;
    if (!cli.transform.empty()) cfg.transform_name = cli.transform;
    if (!cli.mixture.empty()) cfg.mixture = wm::AttackMixture::parse(cli.mixture);
    if (!cli.data.empty()) {
        cfg.data_sources = cli.data;
        int synthetic = 0;
        for (const auto& s : cli.data)
            if (s.rfind("synthetic:", 0) == 0) synthetic += std::stoi(s.substr(10));
        if (synthetic > 0 && cfg.dataset_patches > synthetic) cfg.dataset_patches = synthetic;
    }
    cfg.validate();
    if (cfg.data_sources.empty()) throw wm::ConfigError("train needs at least one data source");

    std::cout << "# resolved configuration\n" << wm::canonical_config_text(cfg) << std::flush;

    wm::RandomStream data_rng(wm::derive_seed(cfg.seed, {0xda7a}));
    const wm::PatchDataset dataset = wm::build_dataset(
        cfg.data_sources, cfg.dataset_patches, cfg.dataset_bins, cfg.patch_h, cfg.patch_w, data_rng);
    std::cout << "# dataset: " << dataset.patches.size() << " patches in " << dataset.bins
              << " variance bins\n";

    std::ofstream log;
    if (!cli.log_path.empty()) {
        log.open(out_path(cli.log_path));
        if (!log) throw wm::IoError("cannot create log file " + cli.log_path);
        log << "iteration,loss,ssim,bce,ber,wall_seconds\n";
    }

    const std::string ckpt_path = out_path(cli.out);
    wm::TrainHooks hooks;
    hooks.on_log = [&](const wm::TrainLogRow& row) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "iter %-7ld loss %.6f ssim %.4f bce %.4f ber %.4f (%.1fs)",
                      row.iteration, row.loss, row.ssim, row.bce, row.ber, row.wall_seconds);
        std::cout << buf << std::endl;
        if (log.is_open()) {
            std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.3f\n", row.iteration,
                          row.loss, row.ssim, row.bce, row.ber, row.wall_seconds);
            log << buf << std::flush;
        }
    };
    hooks.on_checkpoint = [&](const wm::Checkpoint& ckpt) {
        wm::save_checkpoint(ckpt, ckpt_path);
        std::cout << "# checkpoint at iteration " << ckpt.iteration << " -> " << ckpt_path << "\n";
    };

    wm::RandomStream rng(cfg.seed);
    const wm::Checkpoint ckpt = wm::train(cfg, dataset, rng, hooks);
    wm::save_checkpoint(ckpt, ckpt_path);
    std::cout << "# final checkpoint -> " << ckpt_path << "\n";
    return 0;
}

int cmd_embed(const std::string& ckpt_path, const std::string& cover_path,
              const std::string& wm_path, bool random_wm, std::uint64_t wm_seed,
              const std::string& save_wm, double alpha, const std::string& out) {
    const wm::Checkpoint ckpt = wm::load_checkpoint(ckpt_path);
    const wm::ImageU8 cover = wm::read_pgm(cover_path);
    wm::BitGrid bits;
    if (random_wm) {
        bits = random_watermark(wm_seed);
    } else {
        if (wm_path.empty()) throw wm::ConfigError("embed needs --watermark or --random-watermark");
        bits = wm::read_bits(wm_path, 32, 32);
    }
    if (!save_wm.empty()) {
        const std::string p = out_path(save_wm);
        if (p.size() > 4 && p.substr(p.size() - 4) == ".pbm") wm::write_pbm(bits, p);
        else wm::write_bits_packed(bits, p);
    }
    const wm::ImageU8 marked =
        wm::embed_image(cover, bits, ckpt.embedder, wm::StrengthFactor(alpha));
    const std::string p = out_path(out);
    wm::write_pgm(marked, p);

    // Metrics against the (possibly center-cropped) cover actually embedded.
    const wm::ImageU8 reference = wm::embed_image(cover, bits, ckpt.embedder, wm::StrengthFactor(0.0));
    const double p_db = wm::psnr(reference, marked);
    const double s = wm::ssim(wm::to_image(reference), wm::to_image(marked));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "psnr_db %.4f\nssim %.6f\n", p_db, s);
    std::cout << p << "\n" << buf;
    return 0;
}

int cmd_extract(const std::string& ckpt_path, const std::string& image_path,
                const std::string& out, const std::string& reference, bool hard_vote) {
    const wm::Checkpoint ckpt = wm::load_checkpoint(ckpt_path);
    const wm::ImageU8 image = wm::read_pgm(image_path);
    const wm::ExtractImageResult res = wm::extract_image(image, ckpt.extractor, hard_vote);
    const std::string p = out_path(out);
    if (p.size() > 4 && p.substr(p.size() - 4) == ".pbm") wm::write_pbm(res.bits, p);
    else wm::write_bits_packed(res.bits, p);
    std::cout << p << "\n";
    if (!reference.empty()) {
        const wm::BitGrid ref = wm::read_bits(reference, 32, 32);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "ber %.6f\n", wm::ber(ref, res.bits));
        std::cout << buf;
    }
    return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::vector<std::string>& image_args,
                 const std::string& alphas_text, const std::string& attacks_text, int trials,
                 std::uint64_t seed, const std::string& out, const std::string& summary_path) {
    const wm::Checkpoint ckpt = wm::load_checkpoint(ckpt_path);

    std::vector<std::pair<std::string, wm::ImageU8>> images;
    for (const std::string& arg : image_args) {
        if (arg.rfind("synthetic:", 0) == 0) {
            const int n = std::stoi(arg.substr(10));
            for (int i = 0; i < n; ++i) {
                wm::RandomStream rng(wm::derive_seed(seed, {0x5ce11e, static_cast<std::uint64_t>(i)}));
                images.emplace_back("synthetic_" + std::to_string(i),
                                    wm::to_u8(wm::synthetic_scene(512, 512, rng)));
            }
        } else if (fs::is_directory(arg)) {
            std::vector<std::string> files;
            for (const auto& e : fs::directory_iterator(arg))
                if (e.is_regular_file() && e.path().extension() == ".pgm")
                    files.push_back(e.path().string());
            std::sort(files.begin(), files.end());
            for (const auto& f : files)
                images.emplace_back(fs::path(f).filename().string(), wm::read_pgm(f));
        } else {
            images.emplace_back(fs::path(arg).filename().string(), wm::read_pgm(arg));
        }
    }
    if (images.empty()) throw wm::ConfigError("evaluate: no images given");

    const std::vector<double> alphas = parse_double_list(alphas_text);
    const std::vector<wm::AttackGridEntry> grid =
        attacks_text.empty() ? wm::default_attack_grid() : parse_attack_grid(attacks_text);

    const wm::EvaluationReport report =
        wm::evaluate_grid(images, ckpt.embedder, ckpt.extractor, alphas, grid, trials, seed);

    const std::string p = out_path(out);
    std::ofstream csv(p);
    if (!csv) throw wm::IoError("cannot create " + p);
    report.write_csv(csv);
    std::cout << p << "\n";

    const std::string text = report.summary();
    if (!summary_path.empty()) {
        std::ofstream s(out_path(summary_path));
        s << text;
    } else {
        std::cout << text;
    }
    return 0;
}

int cmd_analyze(const std::string& ckpt_path, int bit_i, int bit_j, bool all_bits,
                const std::string& out_dir) {
    const wm::Checkpoint ckpt = wm::load_checkpoint(ckpt_path);
    fs::create_directories(out_dir);

    auto write_pattern = [&](int i, int j) {
        const wm::Image pattern = wm::diffusion_pattern(ckpt.embedder, i, j);
        // x10 amplification around mid-gray, for visibility only.
        wm::Image vis(32, 32);
        for (std::size_t k = 0; k < pattern.size(); ++k) vis.pix[k] = 128.0 + 10.0 * pattern.pix[k];
        const std::string img_path =
            (fs::path(out_dir) / ("pattern_" + std::to_string(i) + "_" + std::to_string(j) + ".pgm"))
                .string();
        wm::write_pgm(wm::to_u8(vis), img_path);

        const auto curve = wm::frequency_energy_curve(pattern);
        const std::string csv_path =
            (fs::path(out_dir) / ("curve_" + std::to_string(i) + "_" + std::to_string(j) + ".csv"))
                .string();
        std::ofstream csv(csv_path);
        if (!csv) throw wm::IoError("cannot create " + csv_path);
        csv << "zigzag_index,dct_row,dct_col,energy\n";
        const auto& order = wm::zigzag_order_8x8();
        for (int z = 0; z < 64; ++z) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g\n", z, order[z].first, order[z].second,
                          curve[z]);
            csv << buf;
        }
        std::cout << img_path << "\n" << csv_path << "\n";
    };

    if (all_bits) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) write_pattern(i, j);
    } else {
        write_pattern(bit_i, bit_j);
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, double eps, int probes) {
    const auto rows = wm::run_gradcheck_suite(seed, eps, probes);
    std::printf("%-42s %s\n", "check", "max_rel_err");
    for (const auto& row : rows) std::printf("%-42s %.3e\n", row.name.c_str(), row.max_rel_err);
    if (!wm::gradcheck_passed(rows)) {
        std::cerr << "gradcheck FAILED (threshold 1e-4)\n";
        return kExitNumeric;
    }
    std::cout << "gradcheck passed: " << rows.size() << " checks below 1e-4\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blind watermarking toolkit"};
    app.require_subcommand(1);

    std::string kernels = "auto";
    app.add_option("--kernels", kernels, "kernel variant: auto|scalar|avx2");

    TrainCli tc;
    auto* train = app.add_subcommand("train", "train embedder+extractor");
    train->add_option("--preset", tc.preset, "gt-net|jt-net|mt-net|overfit");
    train->add_option("--config", tc.config_path, "key = value config file");
    train->add_option("--seed", tc.seed);
    train->add_option("--iterations", tc.iterations);
    train->add_option("--batch", tc.batch);
    train->add_option("--lr", tc.lr);
    train->add_option("--momentum", tc.momentum);
    train->add_option("--gamma", tc.gamma);
    train->add_option("--threads", tc.threads);
    train->add_option("--checkpoint-every", tc.checkpoint_every);
    train->add_option("--transform", tc.transform, "dct|hadamard");
    train->add_option("--attacks", tc.mixture, "attack mixture, e.g. gaussian(3):1");
    train->add_option("--data", tc.data, "image file/dir or synthetic:<count> (repeatable)");
    train->add_option("--out", tc.out, "checkpoint path");
    train->add_option("--log", tc.log_path, "training log CSV");

    std::string e_ckpt, e_cover, e_wm, e_save_wm, e_out = "watermarked.pgm";
    bool e_random = false;
    std::uint64_t e_wm_seed = 1;
    double e_alpha = 1.0;
    auto* embed = app.add_subcommand("embed", "embed a 1024-bit watermark into a 512x512 PGM");
    embed->add_option("--checkpoint", e_ckpt)->required();
    embed->add_option("--cover", e_cover)->required();
    embed->add_option("--watermark", e_wm, "32x32 bits (P4 PBM or 128-byte packed)");
    embed->add_flag("--random-watermark", e_random);
    embed->add_option("--wm-seed", e_wm_seed);
    embed->add_option("--save-watermark", e_save_wm);
    embed->add_option("--alpha", e_alpha);
    embed->add_option("--out", e_out);

    std::string x_ckpt, x_image, x_out = "recovered.bits", x_ref;
    bool x_hard = false;
    auto* extract = app.add_subcommand("extract", "recover the watermark bits");
    extract->add_option("--checkpoint", x_ckpt)->required();
    extract->add_option("--image", x_image)->required();
    extract->add_option("--out", x_out);
    extract->add_option("--reference", x_ref, "original bits; prints BER");
    extract->add_flag("--hard-vote", x_hard);

    std::string v_ckpt, v_alphas = "0.6,0.8,1.0", v_attacks, v_out = "report.csv", v_summary;
    std::vector<std::string> v_images;
    int v_trials = 20;
    std::uint64_t v_seed = 1;
    auto* evaluate = app.add_subcommand("evaluate", "attack-grid robustness report");
    evaluate->add_option("--checkpoint", v_ckpt)->required();
    evaluate->add_option("--images", v_images, "pgm file/dir or synthetic:<count> (repeatable)")
        ->required();
    evaluate->add_option("--alphas", v_alphas);
    evaluate->add_option("--attacks", v_attacks, "kind:l1,l2;kind:l1 (default: full battery)");
    evaluate->add_option("--trials", v_trials, "random watermarks per image");
    evaluate->add_option("--seed", v_seed);
    evaluate->add_option("--out", v_out);
    evaluate->add_option("--summary", v_summary);

    std::string a_ckpt, a_bit = "0,0", a_out_dir = "analysis";
    bool a_all = false;
    auto* analyze = app.add_subcommand("analyze", "diffusion patterns and frequency curves");
    analyze->add_option("--checkpoint", a_ckpt)->required();
    analyze->add_option("--bit", a_bit, "watermark position i,j");
    analyze->add_flag("--all-bits", a_all);
    analyze->add_option("--out-dir", a_out_dir);

    std::uint64_t g_seed = 2024;
    double g_eps = 1e-5;
    int g_probes = 3;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck->add_option("--seed", g_seed);
    gradcheck->add_option("--eps", g_eps);
    gradcheck->add_option("--probes", g_probes);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        wm::kernels::select(kernels);
        if (train->parsed()) return cmd_train(tc);
        if (embed->parsed())
            return cmd_embed(e_ckpt, e_cover, e_wm, e_random, e_wm_seed, e_save_wm, e_alpha, e_out);
        if (extract->parsed()) return cmd_extract(x_ckpt, x_image, x_out, x_ref, x_hard);
        if (evaluate->parsed())
            return cmd_evaluate(v_ckpt, v_images, v_alphas, v_attacks, v_trials, v_seed, v_out,
                                v_summary);
        if (analyze->parsed()) {
            const auto comma = a_bit.find(',');
            if (comma == std::string::npos) throw wm::ConfigError("--bit expects i,j");
            const int bi = std::stoi(a_bit.substr(0, comma));
            const int bj = std::stoi(a_bit.substr(comma + 1));
            return cmd_analyze(a_ckpt, bi, bj, a_all, a_out_dir);
        }
        if (gradcheck->parsed()) return cmd_gradcheck(g_seed, g_eps, g_probes);
    } catch (const wm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const wm::ShapeError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const wm::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const wm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
