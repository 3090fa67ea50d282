#pragma once

#include <cstddef>

#include "rlmix/types.hpp"

// Data-parallel inner loops used by the propagators and the mixing
// analysis. Every kernel has a scalar reference implementation and an
// AVX2 variant; the active backend is chosen once at runtime (cpuid,
// overridable with RLMIX_KERNELS=scalar|avx2|auto). The two variants are
// equivalence-tested against each other in tests/test_kernels.cpp.

namespace rlmix::kernels {

enum class Backend { scalar, avx2 };

// Resolved once per process.
Backend active_backend();
const char* backend_name();

// y = A x with A dense row-major n-by-n.
void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y);

// y += alpha * x.
void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y);

// sum_i |x_i|^2.
double sum_abs2(std::size_t n, const Complex* x);

// out_i = |x_i|^2.
void abs2(std::size_t n, const Complex* x, double* out);

// sum_i |p_i - q_i|.
double l1_distance(std::size_t n, const double* p, const double* q);

namespace scalar {
void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y);
void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y);
double sum_abs2(std::size_t n, const Complex* x);
void abs2(std::size_t n, const Complex* x, double* out);
double l1_distance(std::size_t n, const double* p, const double* q);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define RLMIX_HAVE_AVX2_KERNELS 1
namespace avx2 {
bool supported();
void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y);
void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y);
double sum_abs2(std::size_t n, const Complex* x);
void abs2(std::size_t n, const Complex* x, double* out);
double l1_distance(std::size_t n, const double* p, const double* q);
} // namespace avx2
#else
#define RLMIX_HAVE_AVX2_KERNELS 0
#endif

} // namespace rlmix::kernels
