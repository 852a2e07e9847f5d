#include "wm/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "wm/errors.hpp"

namespace wm::kernels {

namespace {

void gemm_acc_scalar(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_abt_acc_scalar(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * n;
        double* crow = c + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * n;
            double s = 0.0;
            for (int t = 0; t < n; ++t) s += arow[t] * brow[t];
            crow[j] += s;
        }
    }
}

void gemm_atb_acc_scalar(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        const double* brow = b + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            double* crow = c + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

constexpr Ops kScalarOps{gemm_acc_scalar, gemm_abt_acc_scalar, gemm_atb_acc_scalar, "scalar"};

std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve_auto() {
    if (const Ops* v = avx2_ops()) return v;
    return &kScalarOps;
}

const Ops* resolve_from_env() {
    const char* env = std::getenv("WM_KERNELS");
    if (env == nullptr || env[0] == '\0') return resolve_auto();
    const std::string_view name(env);
    if (name == "auto") return resolve_auto();
    if (name == "scalar") return &kScalarOps;
    if (name == "avx2") {
        if (const Ops* v = avx2_ops()) return v;
        throw ConfigError("WM_KERNELS=avx2 requested but AVX2 kernels are unavailable");
    }
    throw ConfigError("unknown WM_KERNELS value: " + std::string(name));
}

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

const Ops& active() {
    const Ops* cur = g_active.load(std::memory_order_acquire);
    if (cur == nullptr) {
        cur = resolve_from_env();
        g_active.store(cur, std::memory_order_release);
    }
    return *cur;
}

void select(std::string_view name) {
    if (name == "auto") {
        g_active.store(resolve_auto(), std::memory_order_release);
        return;
    }
    if (name == "scalar") {
        g_active.store(&kScalarOps, std::memory_order_release);
        return;
    }
    if (name == "avx2") {
        if (const Ops* v = avx2_ops()) {
            g_active.store(v, std::memory_order_release);
            return;
        }
        throw ConfigError("AVX2 kernels are unavailable on this machine/build");
    }
    throw ConfigError("unknown kernel set: " + std::string(name));
}

std::string active_name() { return active().name; }

}  // namespace wm::kernels
