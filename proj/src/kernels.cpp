#include "fg2/kernels.hpp"

#include "fg2/mat.hpp"

namespace fg2::kern {

namespace {

Backend g_backend = [] {
#if defined(__x86_64__) || defined(__i386__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Backend::avx2;
#endif
    return Backend::scalar;
}();

} // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !cpu_has_avx2())
        throw Error("kernels: AVX2 backend requested on a CPU without avx2+fma");
    g_backend = b;
}

const Ops& ops() { return g_backend == Backend::avx2 ? avx2_ops : scalar_ops; }

} // namespace fg2::kern
