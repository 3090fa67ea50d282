#include "rlmix/kernels.hpp"

#if RLMIX_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>

// The AVX2 variants carry target attributes instead of a global -mavx2
// flag so nothing outside this translation unit emits VEX instructions;
// callers must gate on supported().

#define RLMIX_AVX2_FN __attribute__((target("avx2,fma")))

namespace rlmix::kernels::avx2 {

bool supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

// Complex product of the two packed complex<double> lanes in a and x:
// even slots get re*re - im*im, odd slots re*im + im*re.
RLMIX_AVX2_FN inline __m256d cmul2(__m256d a, __m256d x) {
    const __m256d a_re = _mm256_movedup_pd(a);           // [ar0 ar0 ar1 ar1]
    const __m256d a_im = _mm256_permute_pd(a, 0xF);      // [ai0 ai0 ai1 ai1]
    const __m256d x_sw = _mm256_permute_pd(x, 0x5);      // [xi0 xr0 xi1 xr1]
    return _mm256_fmaddsub_pd(a_re, x, _mm256_mul_pd(a_im, x_sw));
}

RLMIX_AVX2_FN inline Complex hsum_complex(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    alignas(16) double out[2];
    _mm_store_pd(out, s);
    return Complex(out[0], out[1]);
}

} // namespace

RLMIX_AVX2_FN void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y) {
    const double* xd = reinterpret_cast<const double*>(x);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = reinterpret_cast<const double*>(a + i * n);
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const __m256d av = _mm256_loadu_pd(row + 2 * j);
            const __m256d xv = _mm256_loadu_pd(xd + 2 * j);
            acc = _mm256_add_pd(acc, cmul2(av, xv));
        }
        Complex s = hsum_complex(acc);
        for (; j < n; ++j) {
            const Complex aj = a[i * n + j];
            const Complex xj = x[j];
            s += Complex(aj.real() * xj.real() - aj.imag() * xj.imag(),
                         aj.real() * xj.imag() + aj.imag() * xj.real());
        }
        y[i] = s;
    }
}

RLMIX_AVX2_FN void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y) {
    const __m256d a_re = _mm256_set1_pd(alpha.real());
    const __m256d a_im = _mm256_set1_pd(alpha.imag());
    double* yd = reinterpret_cast<double*>(y);
    const double* xd = reinterpret_cast<const double*>(x);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        const __m256d x_sw = _mm256_permute_pd(xv, 0x5);
        const __m256d prod = _mm256_fmaddsub_pd(a_re, xv, _mm256_mul_pd(a_im, x_sw));
        const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
        _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, prod));
    }
    for (; i < n; ++i) {
        const double xr = x[i].real();
        const double xi = x[i].imag();
        y[i] += Complex(alpha.real() * xr - alpha.imag() * xi,
                        alpha.real() * xi + alpha.imag() * xr);
    }
}

RLMIX_AVX2_FN double sum_abs2(std::size_t n, const Complex* x) {
    const double* xd = reinterpret_cast<const double*>(x);
    const std::size_t nd = 2 * n;
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= nd; i += 4) {
        const __m256d v = _mm256_loadu_pd(xd + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    s = _mm_hadd_pd(s, s);
    double total = _mm_cvtsd_f64(s);
    for (; i < nd; ++i) {
        total += xd[i] * xd[i];
    }
    return total;
}

RLMIX_AVX2_FN void abs2(std::size_t n, const Complex* x, double* out) {
    const double* xd = reinterpret_cast<const double*>(x);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(xd + 2 * i);
        const __m256d sq = _mm256_mul_pd(v, v);
        const __m256d sums = _mm256_hadd_pd(sq, sq); // [s0 s0 s1 s1]
        out[i] = _mm_cvtsd_f64(_mm256_castpd256_pd128(sums));
        out[i + 1] = _mm_cvtsd_f64(_mm256_extractf128_pd(sums, 1));
    }
    for (; i < n; ++i) {
        out[i] = x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    }
}

RLMIX_AVX2_FN double l1_distance(std::size_t n, const double* p, const double* q) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(q + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    s = _mm_hadd_pd(s, s);
    double total = _mm_cvtsd_f64(s);
    for (; i < n; ++i) {
        total += std::abs(p[i] - q[i]);
    }
    return total;
}

} // namespace rlmix::kernels::avx2

#endif // RLMIX_HAVE_AVX2_KERNELS
