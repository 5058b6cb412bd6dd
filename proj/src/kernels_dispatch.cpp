#include "vmfkd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace vmfkd::kernels {

#if !(defined(__x86_64__) || defined(_M_X64))
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(__aarch64__)
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable* pick_default() {
    if (const char* env = std::getenv("VMFKD_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_table();
        if (want == "avx2" && avx2_table()) return avx2_table();
        if (want == "neon" && neon_table()) return neon_table();
        // Unknown or unsupported request falls through to auto-detection.
    }
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &scalar_table();
}

const KernelTable*& active_slot() {
    static const KernelTable* slot = pick_default();
    return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot(); }

bool select(std::string_view name) {
    if (name == "scalar" || name == "auto") {
        active_slot() = (name == "auto") ? pick_default() : &scalar_table();
        return true;
    }
    if (name == "avx2") {
        if (const KernelTable* t = avx2_table()) {
            active_slot() = t;
            return true;
        }
        return false;
    }
    if (name == "neon") {
        if (const KernelTable* t = neon_table()) {
            active_slot() = t;
            return true;
        }
        return false;
    }
    return false;
}

const char* backend_name() { return active().name; }

}  // namespace vmfkd::kernels
