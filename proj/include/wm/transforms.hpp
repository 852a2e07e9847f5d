#pragma once

#include <string>
#include <vector>

#include "wm/tensor.hpp"

namespace wm {

/// A fixed, invertible linear change of basis applied blockwise as pointwise
/// channel mixing. Row theta of `forward_mat` holds the weights of basis
/// neuron theta over the MN vectorized block (channel convention k = m*N + n,
/// same as space_to_depth). The DCT/Hadamard constructions here are not
/// orthonormal, so `inverse_mat` is always a numerically computed inverse
/// rather than the transpose.
struct TransformSpec {
    std::string name;
    int block_rows = 0;  // M
    int block_cols = 0;  // N
    int n_basis = 0;     // equals M*N throughout this library
    std::vector<double> forward_mat;  // [n_basis x M*N]
    std::vector<double> inverse_mat;  // [M*N x n_basis]
};

/// D(theta,k) = 1/(MN) * cos((2m+1)u*pi/(2M)) * cos((2n+1)v*pi/(2N)) with
/// m = floor(k/N), n = k mod N, u = floor(theta/N), v = theta mod N.
TransformSpec build_dct_matrix(int block_rows, int block_cols);

/// Blockwise f_T = H f H with the Sylvester-construction Hadamard matrix;
/// n must be a power of two.
TransformSpec build_hadamard_matrix(int n);

/// Inverse of a square row-major matrix by Gauss-Jordan with partial
/// pivoting. Throws NumericError when the matrix is singular, the condition
/// estimate exceeds 1e12, or the residual ||D*Dinv - I||_inf is not < 1e-9.
std::vector<double> invert_transform(const std::vector<double>& d, int n);

enum class TransformDirection { forward, inverse };

/// At every spatial position, multiply the channel vector by the transform
/// matrix (or its inverse). No bias.
Tensor3 apply_transform(const Tensor3& t, const TransformSpec& spec, TransformDirection dir);

/// Gradient of apply_transform: the transpose applied to the output gradient.
Tensor3 transform_backward(const Tensor3& grad_out, const TransformSpec& spec,
                           TransformDirection dir);

}  // namespace wm
