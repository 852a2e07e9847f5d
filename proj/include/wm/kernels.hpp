#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace wm::kernels {

/// Accumulating matrix products over contiguous row-major buffers. These are
/// the arithmetic inner loops of every conv/transform forward and backward
/// pass; everything else in the library is index bookkeeping.
///
/// gemm_acc:     C[m x n] += A[m x k] * B[k x n]
/// gemm_abt_acc: C[m x k] += A[m x n] * B[k x n]^T
/// gemm_atb_acc: C[k x n] += A[m x k]^T * B[m x n]
///
/// Contract shared by all variants: accumulation into each C element follows
/// ascending reduction index, so a given variant is bit-deterministic for
/// fixed inputs.
struct Ops {
    void (*gemm_acc)(const double* a, const double* b, double* c, int m, int k, int n);
    void (*gemm_abt_acc)(const double* a, const double* b, double* c, int m, int n, int k);
    void (*gemm_atb_acc)(const double* a, const double* b, double* c, int m, int k, int n);
    const char* name;
};

const Ops& scalar_ops();
/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const Ops* avx2_ops();

/// Active kernel set. Resolved once: WM_KERNELS=scalar|avx2|auto if set,
/// otherwise the best supported variant.
const Ops& active();

/// Force a kernel set ("scalar", "avx2", "auto"). Throws ConfigError for an
/// unknown name or an unsupported variant. Intended for tests and the CLI.
void select(std::string_view name);

std::string active_name();

}  // namespace wm::kernels
