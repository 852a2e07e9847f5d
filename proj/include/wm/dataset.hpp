#pragma once

#include <string>
#include <vector>

#include "wm/rng.hpp"
#include "wm/tensor.hpp"

namespace wm {

struct PatchDataset {
    int patch_height = 32;
    int patch_width = 32;
    std::vector<Image> patches;
    int bins = 1;  // intensity-variance strata actually used
};

/// BT.601 luminance from an RGB triple (0-255 in, 0-255 out, not rounded).
double rgb_to_gray(double r, double g, double b);

/// Training patches from a mix of sources, stratified so the selection
/// covers the full range of intensity variances.
///
/// Source syntax: a PGM/PPM file path, a directory of such files, or
/// "synthetic:<count>" for generated patches. Candidates are pooled from all
/// sources, binned into `bins` equal-count quantile bins by per-patch pixel
/// standard deviation, and sampled evenly per bin until `patch_count`
/// patches are selected. When every candidate has the same deviation the
/// stratification degenerates to one bin (with a warning on stderr).
PatchDataset build_dataset(const std::vector<std::string>& sources, int patch_count, int bins,
                           int patch_h, int patch_w, RandomStream& rng);

/// One generated patch; `kind` cycles through flat gradients, sinusoidal
/// textures, smooth blobs, step edges, filtered noise and checkerboards.
Image synthetic_patch(int h, int w, int kind, RandomStream& rng);

/// A full synthetic test scene (gradients + shapes + texture), for
/// evaluation when no image corpus is available.
Image synthetic_scene(int h, int w, RandomStream& rng);

}  // namespace wm
