#include "wm/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "wm/errors.hpp"
#include "wm/kernels.hpp"

namespace wm {

namespace {

double norm_inf(const std::vector<double>& a, int rows, int cols) {
    double best = 0.0;
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += std::abs(a[static_cast<std::size_t>(i) * cols + j]);
        best = std::max(best, s);
    }
    return best;
}

void attach_inverse(TransformSpec& spec) {
    spec.inverse_mat = invert_transform(spec.forward_mat, spec.n_basis);
}

}  // namespace

TransformSpec build_dct_matrix(int block_rows, int block_cols) {
    if (block_rows < 1 || block_cols < 1)
        throw ConfigError("build_dct_matrix: block dimensions must be >= 1");
    const int m_rows = block_rows, n_cols = block_cols;
    const int size = m_rows * n_cols;
    TransformSpec spec;
    spec.name = "dct";
    spec.block_rows = m_rows;
    spec.block_cols = n_cols;
    spec.n_basis = size;
    spec.forward_mat.assign(static_cast<std::size_t>(size) * size, 0.0);
    const double scale = 1.0 / size;
    for (int theta = 0; theta < size; ++theta) {
        const int u = theta / n_cols;
        const int v = theta % n_cols;
        for (int k = 0; k < size; ++k) {
            const int m = k / n_cols;
            const int n = k % n_cols;
            const double row_factor =
                std::cos((2.0 * m + 1.0) * u * std::numbers::pi / (2.0 * m_rows));
            const double col_factor =
                std::cos((2.0 * n + 1.0) * v * std::numbers::pi / (2.0 * n_cols));
            spec.forward_mat[static_cast<std::size_t>(theta) * size + k] =
                scale * row_factor * col_factor;
        }
    }
    attach_inverse(spec);
    return spec;
}

TransformSpec build_hadamard_matrix(int n) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw ConfigError("build_hadamard_matrix: block size must be a power of two, got " +
                          std::to_string(n));
    // Sylvester recursion H_{2n} = [[H, H], [H, -H]], H_1 = [1].
    std::vector<double> h(static_cast<std::size_t>(n) * n, 1.0);
    for (int half = 1; half < n; half *= 2) {
        for (int i = 0; i < half; ++i) {
            for (int j = 0; j < half; ++j) {
                const double v = h[static_cast<std::size_t>(i) * n + j];
                h[static_cast<std::size_t>(i) * n + (j + half)] = v;
                h[static_cast<std::size_t>(i + half) * n + j] = v;
                h[static_cast<std::size_t>(i + half) * n + (j + half)] = -v;
            }
        }
    }

    const int size = n * n;
    TransformSpec spec;
    spec.name = "hadamard";
    spec.block_rows = n;
    spec.block_cols = n;
    spec.n_basis = size;
    spec.forward_mat.assign(static_cast<std::size_t>(size) * size, 0.0);
    // Row-major block vectorization: k = m*n + col, theta = u*n + v, and
    // D(theta,k) = H(u,m) * H(col,v) reproduces f_T = H f H.
    for (int theta = 0; theta < size; ++theta) {
        const int u = theta / n;
        const int v = theta % n;
        for (int k = 0; k < size; ++k) {
            const int m = k / n;
            const int col = k % n;
            spec.forward_mat[static_cast<std::size_t>(theta) * size + k] =
                h[static_cast<std::size_t>(u) * n + m] * h[static_cast<std::size_t>(col) * n + v];
        }
    }
    attach_inverse(spec);
    return spec;
}

std::vector<double> invert_transform(const std::vector<double>& d, int n) {
    if (n < 1 || d.size() != static_cast<std::size_t>(n) * n)
        throw NumericError("invert_transform: matrix is not square");

    std::vector<double> a = d;
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(a[static_cast<std::size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw NumericError("invert_transform: singular matrix");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a[static_cast<std::size_t>(pivot) * n + j],
                          a[static_cast<std::size_t>(col) * n + j]);
                std::swap(inv[static_cast<std::size_t>(pivot) * n + j],
                          inv[static_cast<std::size_t>(col) * n + j]);
            }
        }
        const double diag = a[static_cast<std::size_t>(col) * n + col];
        const double scale = 1.0 / diag;
        for (int j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(col) * n + j] *= scale;
            inv[static_cast<std::size_t>(col) * n + j] *= scale;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a[static_cast<std::size_t>(r) * n + col];
            if (factor == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[static_cast<std::size_t>(r) * n + j] -=
                    factor * a[static_cast<std::size_t>(col) * n + j];
                inv[static_cast<std::size_t>(r) * n + j] -=
                    factor * inv[static_cast<std::size_t>(col) * n + j];
            }
        }
    }

    const double cond = norm_inf(d, n, n) * norm_inf(inv, n, n);
    if (!(cond < 1e12))
        throw NumericError("invert_transform: ill-conditioned matrix, condition estimate " +
                           std::to_string(cond));

    // Residual ||D * Dinv - I||_inf.
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += d[static_cast<std::size_t>(i) * n + k] * inv[static_cast<std::size_t>(k) * n + j];
            row += std::abs(s - (i == j ? 1.0 : 0.0));
        }
        residual = std::max(residual, row);
    }
    if (!(residual < 1e-9))
        throw NumericError("invert_transform: inverse residual " + std::to_string(residual) +
                           " exceeds 1e-9");
    return inv;
}

namespace {

Tensor3 mix_channels(const Tensor3& t, const std::vector<double>& mat, int rows, int cols,
                     bool transpose) {
    if (!transpose && t.channels != cols)
        throw ShapeError("apply_transform: tensor has " + std::to_string(t.channels) +
                         " channels, matrix expects " + std::to_string(cols));
    if (transpose && t.channels != rows)
        throw ShapeError("transform_backward: tensor has " + std::to_string(t.channels) +
                         " channels, matrix transpose expects " + std::to_string(rows));
    const int s = t.plane_size();
    Tensor3 out(transpose ? cols : rows, t.height, t.width);
    const auto& ops = kernels::active();
    if (!transpose)
        ops.gemm_acc(mat.data(), t.data.data(), out.data.data(), rows, cols, s);
    else
        ops.gemm_atb_acc(mat.data(), t.data.data(), out.data.data(), rows, cols, s);
    return out;
}

}  // namespace

Tensor3 apply_transform(const Tensor3& t, const TransformSpec& spec, TransformDirection dir) {
    const int mn = spec.block_rows * spec.block_cols;
    if (dir == TransformDirection::forward)
        return mix_channels(t, spec.forward_mat, spec.n_basis, mn, false);
    return mix_channels(t, spec.inverse_mat, mn, spec.n_basis, false);
}

Tensor3 transform_backward(const Tensor3& grad_out, const TransformSpec& spec,
                           TransformDirection dir) {
    const int mn = spec.block_rows * spec.block_cols;
    if (dir == TransformDirection::forward)
        return mix_channels(grad_out, spec.forward_mat, spec.n_basis, mn, true);
    return mix_channels(grad_out, spec.inverse_mat, mn, spec.n_basis, true);
}

}  // namespace wm
