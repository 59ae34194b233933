#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pivnet/kernels/kernels.hpp"

using namespace pivnet;

namespace {

std::vector<float> random_f32(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

std::vector<double> random_f64(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void check_close(const std::vector<float>& a, const std::vector<float>& b, float tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float scale = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0f});
        CHECK(std::fabs(a[i] - b[i]) <= tol * scale);
    }
}

// Sizes straddling the 8-lane (f32) and 4-lane (f64) boundaries.
const std::size_t kSizes[] = {1, 2, 3, 5, 7, 8, 9, 15, 16, 17, 31, 53, 128, 131};

}  // namespace

TEST_CASE("scalar kernels: hand-checked values") {
    const auto& k = kernels::scalar_kernels();
    const float a[] = {1, 2, 3};
    const float b[] = {4, -5, 6};
    CHECK(k.dot_f32(a, b, 3) == doctest::Approx(4 - 10 + 18));
    CHECK(k.sum_abs_diff_f32(a, b, 3) == doctest::Approx(3 + 7 + 3));

    const double p[] = {0, 0};
    const double q[] = {3, 4};
    CHECK(k.sqdist_f64(p, q, 2) == doctest::Approx(25.0));

    // gemv: [[1,0],[0,2],[1,1]] * [3,4] + [10,20,30]
    const float w[] = {1, 0, 0, 2, 1, 1};
    const float x[] = {3, 4};
    const float bias[] = {10, 20, 30};
    float y[3];
    k.gemv_f32(w, x, bias, y, 3, 2);
    CHECK(y[0] == doctest::Approx(13));
    CHECK(y[1] == doctest::Approx(28));
    CHECK(y[2] == doctest::Approx(37));

    float yt[2];
    const float d3[] = {1, 1, 1};
    k.gemv_t_f32(w, d3, yt, 3, 2);
    CHECK(yt[0] == doctest::Approx(2));  // column sums
    CHECK(yt[1] == doctest::Approx(3));
}

TEST_CASE("avx2 kernels match scalar reference") {
    const kernels::Kernels* simd = kernels::avx2_kernels();
    if (simd == nullptr) {
        MESSAGE("AVX2 unavailable on this host, dispatch falls back to scalar");
        CHECK(std::string(kernels::active().name) == "scalar");
        return;
    }
    const auto& ref = kernels::scalar_kernels();

    for (std::size_t n : kSizes) {
        auto a = random_f32(n, 100 + n);
        auto b = random_f32(n, 200 + n);

        CHECK(std::fabs(simd->dot_f32(a.data(), b.data(), n) -
                        ref.dot_f32(a.data(), b.data(), n)) <= 1e-4f * (1.0f + n));
        CHECK(std::fabs(simd->sum_abs_diff_f32(a.data(), b.data(), n) -
                        ref.sum_abs_diff_f32(a.data(), b.data(), n)) <=
              1e-4f * (1.0f + n));

        auto y1 = random_f32(n, 300 + n);
        auto y2 = y1;
        simd->axpy_f32(0.37f, a.data(), y1.data(), n);
        ref.axpy_f32(0.37f, a.data(), y2.data(), n);
        check_close(y1, y2, 1e-5f);

        auto r1 = a;
        auto r2 = a;
        simd->relu_f32(r1.data(), n);
        ref.relu_f32(r2.data(), n);
        check_close(r1, r2, 0.0f);

        auto q = random_f64(n, 400 + n);
        auto p = random_f64(n, 500 + n);
        CHECK(std::fabs(simd->sqdist_f64(q.data(), p.data(), n) -
                        ref.sqdist_f64(q.data(), p.data(), n)) <= 1e-11 * (1.0 + n));
    }

    for (std::size_t rows : {1ul, 3ul, 32ul, 50ul}) {
        for (std::size_t cols : {1ul, 5ul, 8ul, 53ul, 128ul}) {
            auto w = random_f32(rows * cols, rows * 1000 + cols);
            auto x = random_f32(cols, cols + 1);
            auto xt = random_f32(rows, rows + 2);
            auto bias = random_f32(rows, rows + 3);

            std::vector<float> y1(rows), y2(rows);
            simd->gemv_f32(w.data(), x.data(), bias.data(), y1.data(), rows, cols);
            ref.gemv_f32(w.data(), x.data(), bias.data(), y2.data(), rows, cols);
            check_close(y1, y2, 1e-5f);

            std::vector<float> t1(cols), t2(cols);
            simd->gemv_t_f32(w.data(), xt.data(), t1.data(), rows, cols);
            ref.gemv_t_f32(w.data(), xt.data(), t2.data(), rows, cols);
            check_close(t1, t2, 1e-5f);

            auto a1 = w;
            auto a2 = w;
            simd->ger_f32(a1.data(), xt.data(), x.data(), 0.11f, rows, cols);
            ref.ger_f32(a2.data(), xt.data(), x.data(), 0.11f, rows, cols);
            check_close(a1, a2, 1e-5f);
        }
    }

    for (std::size_t n : kSizes) {
        for (std::size_t d : {1ul, 2ul, 3ul, 5ul}) {
            auto soa = random_f64(n * d, 600 + n * 7 + d);
            auto q = random_f64(d, 700 + n + d);
            std::vector<double> o1(n), o2(n);
            simd->sqdist_batch_f64(q.data(), soa.data(), n, d, o1.data());
            ref.sqdist_batch_f64(q.data(), soa.data(), n, d, o2.data());
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::fabs(o1[i] - o2[i]) <= 1e-12 * (1.0 + std::fabs(o2[i])));
            }
        }
    }
}

TEST_CASE("dispatch honors PIVNET_KERNELS override") {
    // The active table is resolved once per process; just sanity-check that
    // it picked one of the two implementations.
    const std::string name = kernels::active().name;
    CHECK((name == "scalar" || name == "avx2"));
}
