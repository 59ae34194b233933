#include "pivnet/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace pivnet::kernels {

const Kernels& active() {
    static const Kernels* selected = [] {
        const Kernels* simd = avx2_kernels();
        const char* env = std::getenv("PIVNET_KERNELS");
        if (env != nullptr) {
            if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
            if (std::strcmp(env, "avx2") == 0 && simd != nullptr) return simd;
        }
        return simd != nullptr ? simd : &scalar_kernels();
    }();
    return *selected;
}

}  // namespace pivnet::kernels
