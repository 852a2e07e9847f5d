#include "wm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "wm/errors.hpp"
#include "wm/losses.hpp"

namespace wm {

namespace {

constexpr int kCoverSide = 512;
constexpr int kTileSide = 32;
constexpr int kWmSide = 32;
constexpr int kPlaneSide = 64;

std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

std::array<std::pair<int, int>, 4> WatermarkPlane::copies(int i, int j) {
    return {{{i, j}, {i, j + kWmSide}, {i + kWmSide, j}, {i + kWmSide, j + kWmSide}}};
}

WatermarkPlane build_redundant_plane(const BitGrid& wm) {
    if (wm.height != kWmSide || wm.width != kWmSide)
        throw ShapeError("watermark must be 32x32 bits, got " + std::to_string(wm.height) + "x" +
                         std::to_string(wm.width));
    WatermarkPlane wp;
    wp.plane = BitGrid(kPlaneSide, kPlaneSide);
    for (int i = 0; i < kWmSide; ++i)
        for (int j = 0; j < kWmSide; ++j)
            for (const auto& [pi, pj] : WatermarkPlane::copies(i, j))
                wp.plane.at(pi, pj) = wm.at(i, j);
    return wp;
}

namespace {

ImageU8 center_crop_512(const ImageU8& img) {
    if (img.height == kCoverSide && img.width == kCoverSide) return img;
    if (img.height < kCoverSide || img.width < kCoverSide)
        throw ShapeError("cover must be at least 512x512, got " + std::to_string(img.height) +
                         "x" + std::to_string(img.width));
    std::cerr << "warning: center-cropping " << img.height << "x" << img.width
              << " cover to 512x512\n";
    const int y0 = (img.height - kCoverSide) / 2;
    const int x0 = (img.width - kCoverSide) / 2;
    ImageU8 out(kCoverSide, kCoverSide);
    for (int y = 0; y < kCoverSide; ++y)
        for (int x = 0; x < kCoverSide; ++x) out.at(y, x) = img.at(y0 + y, x0 + x);
    return out;
}

void check_patch_geometry(const TransformSpec& t) {
    if (t.block_rows != 8 || t.block_cols != 8)
        throw ConfigError("the full-image protocol requires 8x8 blocks");
}

}  // namespace

ImageU8 embed_image(const ImageU8& cover_in, const BitGrid& wm, const EmbedderParams& params,
                    StrengthFactor alpha) {
    check_patch_geometry(params.transform);
    const ImageU8 cover = center_crop_512(cover_in);
    const WatermarkPlane wp = build_redundant_plane(wm);
    const Image coverf = to_image(cover);

    Image out(kCoverSide, kCoverSide);
    const int tiles = kCoverSide / kTileSide;  // 16
    for (int ty = 0; ty < tiles; ++ty) {
        for (int tx = 0; tx < tiles; ++tx) {
            Image sub(kTileSide, kTileSide);
            for (int y = 0; y < kTileSide; ++y)
                for (int x = 0; x < kTileSide; ++x)
                    sub.at(y, x) = coverf.at(ty * kTileSide + y, tx * kTileSide + x);
            BitGrid subwm(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) subwm.at(i, j) = wp.plane.at(ty * 4 + i, tx * 4 + j);
            const EmbedOutput eo = embed_forward(sub, subwm, params, alpha);
            for (int y = 0; y < kTileSide; ++y)
                for (int x = 0; x < kTileSide; ++x)
                    out.at(ty * kTileSide + y, tx * kTileSide + x) = eo.watermarked.at(y, x);
        }
    }
    return to_u8(out);
}

ExtractImageResult extract_image(const ImageU8& image_in, const ExtractorParams& params,
                                 bool hard_vote) {
    check_patch_geometry(params.transform);
    const ImageU8 image = center_crop_512(image_in);
    const Image imf = to_image(image);

    ExtractImageResult res;
    res.plane_probs = Image(kPlaneSide, kPlaneSide);
    const int tiles = kCoverSide / kTileSide;
    for (int ty = 0; ty < tiles; ++ty) {
        for (int tx = 0; tx < tiles; ++tx) {
            Image sub(kTileSide, kTileSide);
            for (int y = 0; y < kTileSide; ++y)
                for (int x = 0; x < kTileSide; ++x)
                    sub.at(y, x) = imf.at(ty * kTileSide + y, tx * kTileSide + x);
            const Image probs = extract_forward(sub, params);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    res.plane_probs.at(ty * 4 + i, tx * 4 + j) = probs.at(i, j);
        }
    }

    res.bits = BitGrid(kWmSide, kWmSide);
    for (int i = 0; i < kWmSide; ++i) {
        for (int j = 0; j < kWmSide; ++j) {
            if (hard_vote) {
                int ones = 0;
                for (const auto& [pi, pj] : WatermarkPlane::copies(i, j))
                    if (res.plane_probs.at(pi, pj) >= 0.5) ++ones;
                res.bits.at(i, j) = ones >= 2 ? 1 : 0;
            } else {
                double sum = 0.0;
                for (const auto& [pi, pj] : WatermarkPlane::copies(i, j))
                    sum += res.plane_probs.at(pi, pj);
                res.bits.at(i, j) = sum >= 2.0 ? 1 : 0;
            }
        }
    }
    return res;
}

double ber(const BitGrid& a, const BitGrid& b) {
    if (a.height != b.height || a.width != b.width || a.size() == 0)
        throw ShapeError("ber: bit grids must have identical nonzero dimensions");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a.bits[i] != 0) != (b.bits[i] != 0)) ++diff;
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.size() == 0) throw ShapeError("psnr: shape mismatch");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.pix[i] - b.pix[i];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double num = static_cast<double>(a.size()) * 255.0 * 255.0;
    return 10.0 * std::log10(num / sse);
}

double psnr(const ImageU8& a, const ImageU8& b) { return psnr(to_image(a), to_image(b)); }

Image diffusion_pattern(const EmbedderParams& params, int bit_i, int bit_j) {
    const int gh = 32 / params.transform.block_rows;
    const int gw = 32 / params.transform.block_cols;
    if (bit_i < 0 || bit_i >= gh || bit_j < 0 || bit_j >= gw)
        throw ConfigError("bit position out of the watermark grid");
    const Image cover(32, 32, 128.0);
    BitGrid one(gh, gw), zero(gh, gw);
    one.at(bit_i, bit_j) = 1;
    const StrengthFactor alpha(1.0);
    const EmbedOutput with_one = embed_forward(cover, one, params, alpha);
    const EmbedOutput with_zero = embed_forward(cover, zero, params, alpha);
    Image diff(32, 32);
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff.pix[i] = with_one.watermarked.pix[i] - with_zero.watermarked.pix[i];
    return diff;
}

const std::array<std::pair<int, int>, 64>& zigzag_order_8x8() {
    static const std::array<std::pair<int, int>, 64> order = [] {
        std::array<std::pair<int, int>, 64> o{};
        int idx = 0;
        for (int s = 0; s <= 14; ++s) {
            if (s % 2 == 1) {  // odd diagonals walk down (row ascending)
                for (int u = std::max(0, s - 7); u <= std::min(7, s); ++u) o[idx++] = {u, s - u};
            } else {  // even diagonals walk up
                for (int u = std::min(7, s); u >= std::max(0, s - 7); --u) o[idx++] = {u, s - u};
            }
        }
        return o;
    }();
    return order;
}

std::vector<double> frequency_energy_curve(const Image& pattern) {
    if (pattern.height != 32 || pattern.width != 32)
        throw ShapeError("frequency_energy_curve expects a 32x32 pattern");
    static const TransformSpec dct = build_dct_matrix(8, 8);
    const Tensor3 blocks = space_to_depth(pattern, 8, 8);
    const Tensor3 coeffs = apply_transform(blocks, dct, TransformDirection::forward);
    std::vector<double> curve(64, 0.0);
    const auto& order = zigzag_order_8x8();
    for (int z = 0; z < 64; ++z) {
        const int theta = order[z].first * 8 + order[z].second;
        const double* plane = coeffs.plane(theta);
        double acc = 0.0;
        for (int i = 0; i < coeffs.plane_size(); ++i) acc += std::abs(plane[i]);
        curve[z] = acc;
    }
    return curve;
}

std::vector<AttackGridEntry> default_attack_grid() {
    return {
        {RealAttack::identity, {0}},
        {RealAttack::gaussian_noise, {5, 15, 25}},
        {RealAttack::salt_pepper, {2, 6, 10}},
        {RealAttack::crop, {10, 20, 30}},
        {RealAttack::grid_crop, {20, 30, 40}},
        {RealAttack::pattern_lines, {3, 6, 9}},
        {RealAttack::jpeg, {90, 70, 50}},
        {RealAttack::gaussian_blur, {1, 1.6, 2}},
        {RealAttack::sharpen, {1, 5, 10}},
        {RealAttack::median, {3, 5, 7}},
        {RealAttack::resize, {0.5, 0.75, 1.5}},
    };
}

void EvaluationReport::write_csv(std::ostream& os) const {
    os << "image,alpha,attack,level,psnr_db,ssim,ber\n";
    for (const EvalRow& r : rows) {
        os << r.image << ',' << fmt(r.alpha, "%.2f") << ',' << r.attack << ',' << fmt(r.level, "%g")
           << ',' << (std::isinf(r.psnr_db) ? "inf" : fmt(r.psnr_db, "%.4f")) << ','
           << fmt(r.ssim, "%.6f") << ',' << fmt(r.ber, "%.6f") << '\n';
    }
}

std::string EvaluationReport::summary() const {
    // Collect by alpha -> attack/level -> mean BER over images.
    std::map<double, std::map<std::string, std::pair<double, int>>> cells;
    std::map<double, std::pair<double, int>> quality;  // alpha -> (psnr+ssim sums, count)
    std::map<double, double> ssim_sum;
    std::vector<std::string> col_order;
    for (const EvalRow& r : rows) {
        const std::string col = r.attack + "(" + fmt(r.level, "%g") + ")";
        if (std::find(col_order.begin(), col_order.end(), col) == col_order.end())
            col_order.push_back(col);
        auto& cell = cells[r.alpha][col];
        cell.first += r.ber;
        cell.second += 1;
        if (std::isfinite(r.psnr_db)) {
            quality[r.alpha].first += r.psnr_db;
            quality[r.alpha].second += 1;
            ssim_sum[r.alpha] += r.ssim;
        }
    }
    std::ostringstream os;
    for (auto& [alpha, cols] : cells) {
        os << "alpha " << fmt(alpha, "%.2f");
        if (quality[alpha].second > 0) {
            os << "  mean PSNR " << fmt(quality[alpha].first / quality[alpha].second, "%.2f")
               << " dB  mean SSIM " << fmt(ssim_sum[alpha] / quality[alpha].second, "%.4f");
        }
        os << "\n";
        for (const std::string& col : col_order) {
            auto it = cols.find(col);
            if (it == cols.end()) continue;
            os << "  " << col << ": BER " << fmt(100.0 * it->second.first / it->second.second, "%.2f")
               << "%\n";
        }
    }
    return os.str();
}

EvaluationReport evaluate_grid(const std::vector<std::pair<std::string, ImageU8>>& images,
                               const EmbedderParams& emb, const ExtractorParams& ext,
                               const std::vector<double>& alphas,
                               const std::vector<AttackGridEntry>& grid, int wm_trials,
                               std::uint64_t seed) {
    if (wm_trials < 1) throw ConfigError("evaluate_grid: wm_trials must be >= 1");
    EvaluationReport report;
    for (std::size_t ii = 0; ii < images.size(); ++ii) {
        const auto& [name, cover] = images[ii];
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            const StrengthFactor alpha(alphas[ai]);

            // Embed the trial watermarks once; reuse across attacks.
            std::vector<BitGrid> wms;
            std::vector<ImageU8> marked;
            double psnr_sum = 0.0, ssim_sum = 0.0;
            int finite_psnr = 0;
            for (int t = 0; t < wm_trials; ++t) {
                RandomStream trial_rng(derive_seed(seed, {ii, ai, 0, 0, static_cast<std::uint64_t>(t)}));
                BitGrid wm(32, 32);
                for (auto& b : wm.bits) b = trial_rng.bernoulli(0.5) ? 1 : 0;
                ImageU8 w = embed_image(cover, wm, emb, alpha);
                const double p = psnr(cover, w);
                if (std::isfinite(p)) {
                    psnr_sum += p;
                    ++finite_psnr;
                }
                ssim_sum += ssim(to_image(cover), to_image(w));
                wms.push_back(std::move(wm));
                marked.push_back(std::move(w));
            }
            const double mean_psnr =
                finite_psnr > 0 ? psnr_sum / finite_psnr : std::numeric_limits<double>::infinity();
            const double mean_ssim = ssim_sum / wm_trials;

            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                for (std::size_t li = 0; li < grid[gi].levels.size(); ++li) {
                    const double level = grid[gi].levels[li];
                    double ber_sum = 0.0;
                    for (int t = 0; t < wm_trials; ++t) {
                        RandomStream attack_rng(derive_seed(
                            seed, {ii, ai, gi + 1, li + 1, static_cast<std::uint64_t>(t)}));
                        RealAttackParams params;
                        params.level = level;
                        const ImageU8 attacked =
                            apply_real_attack(marked[t], grid[gi].kind, params, attack_rng);
                        const ExtractImageResult ex = extract_image(attacked, ext);
                        ber_sum += ber(wms[t], ex.bits);
                    }
                    EvalRow row;
                    row.image = name;
                    row.alpha = alphas[ai];
                    row.attack = real_attack_name(grid[gi].kind);
                    row.level = level;
                    row.psnr_db = mean_psnr;
                    row.ssim = mean_ssim;
                    row.ber = ber_sum / wm_trials;
                    report.rows.push_back(std::move(row));
                }
            }
        }
    }
    return report;
}

}  // namespace wm
