#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wm {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central-difference check of an analytic gradient.
///
/// `f` is evaluated with individual coordinates of `params` displaced by
/// +/-eps (the buffer is restored afterwards). Per coordinate the error is
/// |analytic - numeric| / max(1e-8, |numeric|); the max over the probed
/// coordinates is returned. `coords` selects a probe subset; empty probes
/// every coordinate. Throws NumericError when f returns a non-finite value.
GradCheckResult finite_difference_check(const std::function<double(std::span<const double>)>& f,
                                        std::span<double> params,
                                        std::span<const double> analytic_grad, double eps,
                                        std::span<const std::size_t> coords = {});

}  // namespace wm
