#include <cmath>

#include "rlmix/kernels.hpp"

namespace rlmix::kernels::scalar {

void cmatvec(std::size_t n, const Complex* a, const Complex* x, Complex* y) {
    for (std::size_t i = 0; i < n; ++i) {
        const Complex* row = a + i * n;
        double acc_re = 0.0;
        double acc_im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ar = row[j].real();
            const double ai = row[j].imag();
            const double xr = x[j].real();
            const double xi = x[j].imag();
            acc_re += ar * xr - ai * xi;
            acc_im += ar * xi + ai * xr;
        }
        y[i] = Complex(acc_re, acc_im);
    }
}

void caxpy(std::size_t n, Complex alpha, const Complex* x, Complex* y) {
    const double ar = alpha.real();
    const double ai = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real();
        const double xi = x[i].imag();
        y[i] += Complex(ar * xr - ai * xi, ar * xi + ai * xr);
    }
}

double sum_abs2(std::size_t n, const Complex* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    }
    return acc;
}

void abs2(std::size_t n, const Complex* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    }
}

double l1_distance(std::size_t n, const double* p, const double* q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += std::abs(p[i] - q[i]);
    }
    return acc;
}

} // namespace rlmix::kernels::scalar
