#include "fdilab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

namespace fdilab::kern {
namespace {

std::atomic<const Ops*> g_selected{nullptr};

const Ops* pick_default() {
    if (const char* env = std::getenv("FDILAB_KERNELS")) {
        std::string want(env);
        if (want == "scalar") return &scalar_ops();
        if (want == "avx2" && cpu_has_avx2() && avx2_ops()) return avx2_ops();
        // unknown or unavailable value: fall through to auto
    }
    if (cpu_has_avx2() && avx2_ops()) return avx2_ops();
    return &scalar_ops();
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops& ops() {
    const Ops* cur = g_selected.load(std::memory_order_acquire);
    if (!cur) {
        cur = pick_default();
        g_selected.store(cur, std::memory_order_release);
    }
    return *cur;
}

void select_backend(const std::string& name) {
    if (name == "auto") {
        g_selected.store(pick_default(), std::memory_order_release);
        return;
    }
    if (name == "scalar") {
        g_selected.store(&scalar_ops(), std::memory_order_release);
        return;
    }
    if (name == "avx2") {
        if (!cpu_has_avx2() || !avx2_ops())
            throw std::runtime_error("avx2 kernel backend not available on this machine");
        g_selected.store(avx2_ops(), std::memory_order_release);
        return;
    }
    throw std::runtime_error("unknown kernel backend: " + name);
}

}  // namespace fdilab::kern
