// AVX2/FMA variants of the gemm kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; the rest of the library stays at baseline
// ISA and reaches these through the runtime dispatch in kernels.cpp.

#include "wm/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace wm::kernels {

namespace {

bool cpu_supports_avx2_fma() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

// C[m x n] += A[m x k] * B[k x n]. Row tiles of C are kept in registers
// across the whole k loop: 16-column tiles use four ymm accumulators.
void gemm_acc_avx2(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256d c0 = _mm256_loadu_pd(crow + j);
            __m256d c1 = _mm256_loadu_pd(crow + j + 4);
            __m256d c2 = _mm256_loadu_pd(crow + j + 8);
            __m256d c3 = _mm256_loadu_pd(crow + j + 12);
            for (int kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(arow[kk]);
                const double* brow = b + static_cast<std::size_t>(kk) * n + j;
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
                c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
                c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
                c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
            }
            _mm256_storeu_pd(crow + j, c0);
            _mm256_storeu_pd(crow + j + 4, c1);
            _mm256_storeu_pd(crow + j + 8, c2);
            _mm256_storeu_pd(crow + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d c0 = _mm256_loadu_pd(crow + j);
            for (int kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(arow[kk]);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<std::size_t>(kk) * n + j), c0);
            }
            _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) {
            double s = crow[j];
            for (int kk = 0; kk < k; ++kk) s += arow[kk] * b[static_cast<std::size_t>(kk) * n + j];
            crow[j] = s;
        }
    }
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// C[m x k] += A[m x n] * B[k x n]^T: dot products over the shared n axis.
void gemm_abt_acc_avx2(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * n;
        double* crow = c + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * n;
            __m256d acc = _mm256_setzero_pd();
            int t = 0;
            for (; t + 4 <= n; t += 4)
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + t), _mm256_loadu_pd(brow + t), acc);
            double s = hsum(acc);
            for (; t < n; ++t) s += arow[t] * brow[t];
            crow[j] += s;
        }
    }
}

// C[k x n] += A[m x k]^T * B[m x n]: axpy of B rows into C rows.
void gemm_atb_acc_avx2(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        const double* brow = b + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const __m256d av = _mm256_set1_pd(arow[kk]);
            double* crow = c + static_cast<std::size_t>(kk) * n;
            int j = 0;
            for (; j + 4 <= n; j += 4)
                _mm256_storeu_pd(crow + j,
                                 _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
            for (; j < n; ++j) crow[j] += arow[kk] * brow[j];
        }
    }
}

constexpr Ops kAvx2Ops{gemm_acc_avx2, gemm_abt_acc_avx2, gemm_atb_acc_avx2, "avx2"};

}  // namespace

const Ops* avx2_ops() {
    static const bool supported = cpu_supports_avx2_fma();
    return supported ? &kAvx2Ops : nullptr;
}

}  // namespace wm::kernels

#else  // compiled without AVX2 support

namespace wm::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace wm::kernels

#endif
