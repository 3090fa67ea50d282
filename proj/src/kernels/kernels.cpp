#include "rlmix/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rlmix::kernels {

namespace {

Backend resolve_backend() {
    const char* env = std::getenv("RLMIX_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
#if RLMIX_HAVE_AVX2_KERNELS
        if (std::strcmp(env, "avx2") == 0 && avx2::supported()) return Backend::avx2;
#endif
        // anything else (including "auto") falls through to detection
    }
#if RLMIX_HAVE_AVX2_KERNELS
    if (avx2::supported()) return Backend::avx2;
#endif
    return Backend::scalar;
}

} // namespace

Backend active_backend() {
    static const Backend backend = resolve_backend();
    return backend;
}

const char* backend_name() {
    return active_backend() == Backend::avx2 ? "avx2" : "scalar";
}

void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y) {
#if RLMIX_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::cmatvec(n, a, x, y);
        return;
    }
#endif
    scalar::cmatvec(n, a, x, y);
}

void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y) {
#if RLMIX_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::caxpy(n, alpha, x, y);
        return;
    }
#endif
    scalar::caxpy(n, alpha, x, y);
}

double sum_abs2(std::size_t n, const Complex* x) {
#if RLMIX_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) return avx2::sum_abs2(n, x);
#endif
    return scalar::sum_abs2(n, x);
}

void abs2(std::size_t n, const Complex* x, double* out) {
#if RLMIX_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::abs2(n, x, out);
        return;
    }
#endif
    scalar::abs2(n, x, out);
}

double l1_distance(std::size_t n, const double* p, const double* q) {
#if RLMIX_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) return avx2::l1_distance(n, p, q);
#endif
    return scalar::l1_distance(n, p, q);
}

} // namespace rlmix::kernels
