#include "wm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <numeric>

#include "wm/errors.hpp"
#include "wm/imageio.hpp"

namespace wm {

double rgb_to_gray(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace {

double patch_std(const Image& p) {
    double mean = 0.0;
    for (double v : p.pix) mean += v;
    mean /= static_cast<double>(p.size());
    double var = 0.0;
    for (double v : p.pix) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(p.size()));
}

double clamp255(double v) { return std::min(255.0, std::max(0.0, v)); }

}  // namespace

Image synthetic_patch(int h, int w, int kind, RandomStream& rng) {
    Image p(h, w);
    switch (kind % 6) {
        case 0: {  // linear gradient over a random base
            const double base = rng.uniform(0.0, 255.0);
            const double gx = rng.uniform(-4.0, 4.0);
            const double gy = rng.uniform(-4.0, 4.0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) p.at(y, x) = clamp255(base + gx * x + gy * y);
            break;
        }
        case 1: {  // oriented sinusoid
            const double fx = rng.uniform(0.05, 0.9);
            const double fy = rng.uniform(0.05, 0.9);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double amp = rng.uniform(20.0, 100.0);
            const double base = rng.uniform(amp, 255.0 - amp);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    p.at(y, x) = clamp255(base + amp * std::sin(fx * x + fy * y + phase));
            break;
        }
        case 2: {  // sum of smooth blobs
            const double base = rng.uniform(40.0, 215.0);
            for (double& v : p.pix) v = base;
            const int blobs = 2 + static_cast<int>(rng.below(4));
            for (int b = 0; b < blobs; ++b) {
                const double cy = rng.uniform(0.0, h);
                const double cx = rng.uniform(0.0, w);
                const double s = rng.uniform(2.0, 10.0);
                const double amp = rng.uniform(-90.0, 90.0);
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                        p.at(y, x) = clamp255(p.at(y, x) + amp * std::exp(-d2 / (2.0 * s * s)));
                    }
            }
            break;
        }
        case 3: {  // step edge at a random orientation
            const double lo = rng.uniform(0.0, 100.0);
            const double hi = rng.uniform(155.0, 255.0);
            const double angle = rng.uniform(0.0, std::numbers::pi);
            const double c = std::cos(angle), s = std::sin(angle);
            const double offset = rng.uniform(0.25, 0.75) * (c * w + s * h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) p.at(y, x) = (c * x + s * y) < offset ? lo : hi;
            break;
        }
        case 4: {  // box-smoothed white noise
            const double base = rng.uniform(60.0, 195.0);
            const double amp = rng.uniform(20.0, 60.0);
            Image raw(h, w);
            for (double& v : raw.pix) v = rng.uniform(-amp, amp);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    int cnt = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy >= 0 && yy < h && xx >= 0 && xx < w) {
                                acc += raw.at(yy, xx);
                                ++cnt;
                            }
                        }
                    p.at(y, x) = clamp255(base + acc / cnt * 2.0);
                }
            break;
        }
        default: {  // checkerboard
            const int cell = 2 + static_cast<int>(rng.below(6));
            const double lo = rng.uniform(0.0, 110.0);
            const double hi = rng.uniform(145.0, 255.0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    p.at(y, x) = ((y / cell + x / cell) % 2 == 0) ? lo : hi;
            break;
        }
    }
    return p;
}

Image synthetic_scene(int h, int w, RandomStream& rng) {
    Image img(h, w);
    // Smooth background gradient.
    const double base = rng.uniform(60.0, 180.0);
    const double gx = rng.uniform(-0.2, 0.2);
    const double gy = rng.uniform(-0.2, 0.2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(y, x) = base + gx * x + gy * y;
    // Large soft blobs.
    for (int b = 0; b < 6; ++b) {
        const double cy = rng.uniform(0.0, h), cx = rng.uniform(0.0, w);
        const double s = rng.uniform(h / 16.0, h / 4.0);
        const double amp = rng.uniform(-70.0, 70.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                img.at(y, x) += amp * std::exp(-d2 / (2.0 * s * s));
            }
    }
    // A few hard-edged rectangles.
    for (int r = 0; r < 4; ++r) {
        const int rh = 8 + static_cast<int>(rng.below(h / 4));
        const int rw = 8 + static_cast<int>(rng.below(w / 4));
        const int y0 = static_cast<int>(rng.below(std::max(1, h - rh)));
        const int x0 = static_cast<int>(rng.below(std::max(1, w - rw)));
        const double level = rng.uniform(0.0, 255.0);
        for (int y = y0; y < y0 + rh; ++y)
            for (int x = x0; x < x0 + rw; ++x) img.at(y, x) = 0.7 * img.at(y, x) + 0.3 * level;
    }
    // Fine texture.
    for (double& v : img.pix) v = clamp255(v + rng.uniform(-6.0, 6.0));
    return img;
}

namespace {

void collect_file_candidates(const std::string& path, int per_image, int patch_h, int patch_w,
                             RandomStream& rng, std::vector<Image>& out) {
    const ImageU8 img8 = read_image_gray(path);
    if (img8.height < patch_h || img8.width < patch_w)
        throw IoError(path + ": smaller than the patch size");
    const Image img = to_image(img8);
    for (int i = 0; i < per_image; ++i) {
        const int y0 = static_cast<int>(rng.below(img.height - patch_h + 1));
        const int x0 = static_cast<int>(rng.below(img.width - patch_w + 1));
        Image p(patch_h, patch_w);
        for (int y = 0; y < patch_h; ++y)
            for (int x = 0; x < patch_w; ++x) p.at(y, x) = img.at(y0 + y, x0 + x);
        out.push_back(std::move(p));
    }
}

bool is_image_file(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

PatchDataset build_dataset(const std::vector<std::string>& sources, int patch_count, int bins,
                           int patch_h, int patch_w, RandomStream& rng) {
    if (sources.empty()) throw ConfigError("build_dataset: at least one source is required");
    if (patch_count < 1) throw ConfigError("build_dataset: patch_count must be >= 1");
    if (bins < 1) throw ConfigError("build_dataset: bins must be >= 1");

    // Gather candidates; oversample so quantile bins have room to choose.
    const int want_candidates = std::max(patch_count * 2, patch_count + bins);
    std::vector<Image> candidates;

    std::vector<std::string> files;
    int synthetic_total = 0;
    for (const std::string& src : sources) {
        if (src.rfind("synthetic:", 0) == 0) {
            const int n = std::stoi(src.substr(10));
            if (n < 1) throw ConfigError("synthetic source count must be >= 1");
            synthetic_total += n;
        } else if (std::filesystem::is_directory(src)) {
            for (const auto& e : std::filesystem::directory_iterator(src))
                if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path().string());
        } else {
            files.push_back(src);
        }
    }
    std::sort(files.begin(), files.end());

    if (synthetic_total > 0) {
        const int n = std::max(synthetic_total, files.empty() ? want_candidates : synthetic_total);
        for (int i = 0; i < n; ++i) candidates.push_back(synthetic_patch(patch_h, patch_w, i, rng));
    }
    if (!files.empty()) {
        const int per_image = static_cast<int>(
            (want_candidates - candidates.size() + files.size() - 1) / files.size());
        for (const std::string& f : files)
            collect_file_candidates(f, std::max(1, per_image), patch_h, patch_w, rng, candidates);
    }

    if (static_cast<int>(candidates.size()) < patch_count)
        throw ConfigError("build_dataset: only " + std::to_string(candidates.size()) +
                          " candidate patches for " + std::to_string(patch_count) + " requested");

    // Quantile bins by patch standard deviation.
    std::vector<double> stds(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) stds[i] = patch_std(candidates[i]);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&stds](std::size_t a, std::size_t b) { return stds[a] < stds[b]; });

    int effective_bins = bins;
    if (stds[order.front()] == stds[order.back()]) {
        if (bins > 1)
            std::cerr << "warning: all candidate patches have identical intensity deviation; "
                         "stratification degenerates to one bin\n";
        effective_bins = 1;
    }
    effective_bins = std::min<int>(effective_bins, static_cast<int>(candidates.size()));

    PatchDataset ds;
    ds.patch_height = patch_h;
    ds.patch_width = patch_w;
    ds.bins = effective_bins;
    ds.patches.reserve(patch_count);

    const std::size_t n_cand = order.size();
    std::size_t taken = 0;
    for (int b = 0; b < effective_bins; ++b) {
        const std::size_t lo = n_cand * b / effective_bins;
        const std::size_t hi = n_cand * (b + 1) / effective_bins;
        // Even split; earlier bins absorb the remainder one by one.
        std::size_t quota = static_cast<std::size_t>(patch_count) / effective_bins;
        if (static_cast<std::size_t>(b) < static_cast<std::size_t>(patch_count) % effective_bins)
            ++quota;
        if (hi - lo < quota)
            throw ConfigError("build_dataset: bin " + std::to_string(b) + " holds only " +
                              std::to_string(hi - lo) + " candidates, needs " +
                              std::to_string(quota));
        // Sample quota indices without replacement inside the bin.
        std::vector<std::size_t> pool(order.begin() + lo, order.begin() + hi);
        for (std::size_t i = 0; i < quota; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            ds.patches.push_back(candidates[pool[i]]);
            ++taken;
        }
    }
    (void)taken;
    return ds;
}

}  // namespace wm
