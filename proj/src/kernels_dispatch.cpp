#include "epifit/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace epifit::kern {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const Kernels& active_kernels() {
    static const Kernels* chosen = [] {
        const Kernels* best = &scalar_kernels();
        if (avx2_supported() && avx2_kernels() != nullptr) best = avx2_kernels();
        if (const char* forced = std::getenv("EPIFIT_ISA")) {
            if (std::strcmp(forced, "scalar") == 0) best = &scalar_kernels();
            else if (std::strcmp(forced, "avx2") == 0 && avx2_supported() &&
                     avx2_kernels() != nullptr)
                best = avx2_kernels();
        }
        return best;
    }();
    return *chosen;
}

} // namespace epifit::kern
