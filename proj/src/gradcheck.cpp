#include "wm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wm/errors.hpp"

namespace wm {

GradCheckResult finite_difference_check(const std::function<double(std::span<const double>)>& f,
                                        std::span<double> params,
                                        std::span<const double> analytic_grad, double eps,
                                        std::span<const std::size_t> coords) {
    if (eps <= 0.0) throw NumericError("finite_difference_check: eps must be positive");
    if (analytic_grad.size() != params.size())
        throw NumericError("finite_difference_check: gradient/parameter size mismatch");

    std::vector<std::size_t> all;
    if (coords.empty()) {
        all.resize(params.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        coords = all;
    }

    GradCheckResult res;
    for (std::size_t idx : coords) {
        const double saved = params[idx];
        params[idx] = saved + eps;
        const double fp = f(params);
        params[idx] = saved - eps;
        const double fm = f(params);
        params[idx] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_difference_check: non-finite function value");
        const double numeric = (fp - fm) / (2.0 * eps);
        const double analytic = analytic_grad[idx];
        const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_coord = idx;
            res.worst_analytic = analytic;
            res.worst_numeric = numeric;
        }
    }
    return res;
}

}  // namespace wm
