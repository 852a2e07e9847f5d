#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wm {

struct GradCheckRow {
    std::string name;
    double max_rel_err = 0.0;
};

/// Central finite-difference verification (64-bit, default eps 1e-5) of every
/// hand-derived gradient: each layer kind x activation, both transforms, both
/// loss terms, every differentiable attack, and the full
/// embedder -> attack -> extractor chain probed at random weights in every
/// layer of both networks. At least `probes` coordinates are checked per
/// tensor. All rows must come in below 1e-4 relative error.
std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed, double eps = 1e-5,
                                              int probes = 3);

bool gradcheck_passed(const std::vector<GradCheckRow>& rows, double threshold = 1e-4);

}  // namespace wm
