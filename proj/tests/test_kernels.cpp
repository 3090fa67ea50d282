#include <doctest.h>

#include <random>

#include "rlmix/kernels.hpp"

using namespace rlmix;

namespace {

CVector random_cvector(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CVector v(n);
    for (Complex& z : v) z = Complex(dist(rng), dist(rng));
    return v;
}

RVector random_rvector(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    RVector v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("scalar kernels match naive formulas") {
    std::mt19937 rng(7);
    const std::size_t n = 13;
    const CVector a = random_cvector(rng, n * n);
    const CVector x = random_cvector(rng, n);

    CVector y(n);
    kernels::scalar::cmatvec(n, a.data(), x.data(), y.data());
    for (std::size_t i = 0; i < n; ++i) {
        Complex expect(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) expect += a[i * n + j] * x[j];
        CHECK(std::abs(y[i] - expect) < 1e-13);
    }

    const Complex alpha(0.3, -0.7);
    CVector z = y;
    kernels::scalar::caxpy(n, alpha, x.data(), z.data());
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(z[i] - (y[i] + alpha * x[i])) < 1e-13);
    }

    double expect_norm = 0.0;
    for (const Complex& c : x) expect_norm += std::norm(c);
    CHECK(kernels::scalar::sum_abs2(n, x.data()) == doctest::Approx(expect_norm).epsilon(1e-13));

    RVector out(n);
    kernels::scalar::abs2(n, x.data(), out.data());
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(out[i] == doctest::Approx(std::norm(x[i])).epsilon(1e-13));
    }

    const RVector p = random_rvector(rng, n);
    const RVector q = random_rvector(rng, n);
    double expect_l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) expect_l1 += std::abs(p[i] - q[i]);
    CHECK(kernels::scalar::l1_distance(n, p.data(), q.data()) ==
          doctest::Approx(expect_l1).epsilon(1e-13));
}

#if RLMIX_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels are equivalent to the scalar reference") {
    if (!kernels::avx2::supported()) {
        return; // nothing to compare on this host
    }
    std::mt19937 rng(11);
    // Odd lengths exercise the scalar tails.
    for (const std::size_t n : {1u, 2u, 3u, 5u, 8u, 17u, 33u, 64u, 129u}) {
        const CVector a = random_cvector(rng, n * n);
        const CVector x = random_cvector(rng, n);

        CVector ys(n), yv(n);
        kernels::scalar::cmatvec(n, a.data(), x.data(), ys.data());
        kernels::avx2::cmatvec(n, a.data(), x.data(), yv.data());
        for (std::size_t i = 0; i < n; ++i) {
            double scale = 0.0;
            for (std::size_t j = 0; j < n; ++j) scale += std::abs(a[i * n + j]) * std::abs(x[j]);
            CHECK(std::abs(ys[i] - yv[i]) <= 1e-13 * (1.0 + scale));
        }

        const Complex alpha(-0.25, 0.6);
        CVector zs = ys, zv = ys;
        kernels::scalar::caxpy(n, alpha, x.data(), zs.data());
        kernels::avx2::caxpy(n, alpha, x.data(), zv.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(zs[i] - zv[i]) < 1e-13);

        CHECK(kernels::avx2::sum_abs2(n, x.data()) ==
              doctest::Approx(kernels::scalar::sum_abs2(n, x.data())).epsilon(1e-13));

        RVector os(n), ov(n);
        kernels::scalar::abs2(n, x.data(), os.data());
        kernels::avx2::abs2(n, x.data(), ov.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(os[i] == doctest::Approx(ov[i]).epsilon(1e-13));

        const RVector p = random_rvector(rng, n);
        const RVector q = random_rvector(rng, n);
        CHECK(kernels::avx2::l1_distance(n, p.data(), q.data()) ==
              doctest::Approx(kernels::scalar::l1_distance(n, p.data(), q.data())).epsilon(1e-13));
    }
}
#endif

TEST_CASE("dispatch resolves to a working backend") {
    const std::size_t n = 9;
    std::mt19937 rng(3);
    const CVector a = random_cvector(rng, n * n);
    const CVector x = random_cvector(rng, n);
    CVector y(n), ref(n);
    kernels::cmatvec(n, a.data(), x.data(), y.data());
    kernels::scalar::cmatvec(n, a.data(), x.data(), ref.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - ref[i]) < 1e-12);
    CHECK((std::string(kernels::backend_name()) == "avx2" ||
           std::string(kernels::backend_name()) == "scalar"));
}
