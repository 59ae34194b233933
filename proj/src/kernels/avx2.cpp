#include "pivnet/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace pivnet::kernels {
namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

inline double hsum256d(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_add_pd(lo, _mm_unpackhi_pd(lo, lo));
    return _mm_cvtsd_f64(lo);
}

float dot_f32_avx2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    }
    float total = hsum256(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

void gemv_f32_avx2(const float* w, const float* x, const float* b, float* y,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = dot_f32_avx2(w + i * cols, x, cols) + b[i];
    }
}

void gemv_t_f32_avx2(const float* w, const float* x, float* y,
                     std::size_t rows, std::size_t cols) {
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8) _mm256_storeu_ps(y + j, _mm256_setzero_ps());
    for (; j < cols; ++j) y[j] = 0.0f;
    for (std::size_t i = 0; i < rows; ++i) {
        const float* wr = w + i * cols;
        const __m256 xi = _mm256_set1_ps(x[i]);
        std::size_t c = 0;
        for (; c + 8 <= cols; c += 8) {
            __m256 acc = _mm256_loadu_ps(y + c);
            acc = _mm256_fmadd_ps(xi, _mm256_loadu_ps(wr + c), acc);
            _mm256_storeu_ps(y + c, acc);
        }
        for (; c < cols; ++c) y[c] += x[i] * wr[c];
    }
}

void ger_f32_avx2(float* a, const float* x, const float* y, float alpha,
                  std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        float* ar = a + i * cols;
        const float s = alpha * x[i];
        const __m256 sv = _mm256_set1_ps(s);
        std::size_t c = 0;
        for (; c + 8 <= cols; c += 8) {
            __m256 acc = _mm256_loadu_ps(ar + c);
            acc = _mm256_fmadd_ps(sv, _mm256_loadu_ps(y + c), acc);
            _mm256_storeu_ps(ar + c, acc);
        }
        for (; c < cols; ++c) ar[c] += s * y[c];
    }
}

void axpy_f32_avx2(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 acc = _mm256_loadu_ps(y + i);
        acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), acc);
        _mm256_storeu_ps(y + i, acc);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_f32_avx2(float* x, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

float sum_abs_diff_f32_avx2(const float* a, const float* b, std::size_t n) {
    const __m256 signmask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 diff = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, _mm256_and_ps(diff, signmask));
    }
    float total = hsum256(acc);
    for (; i < n; ++i) total += std::fabs(a[i] - b[i]);
    return total;
}

double sqdist_f64_avx2(const double* a, const double* b, std::size_t d) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= d; j += 4) {
        __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double total = hsum256d(acc);
    for (; j < d; ++j) {
        const double diff = a[j] - b[j];
        total += diff * diff;
    }
    return total;
}

void sqdist_batch_f64_avx2(const double* q, const double* soa, std::size_t n,
                           std::size_t d, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_setzero_pd());
    for (; i < n; ++i) out[i] = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double* col = soa + j * n;
        const __m256d qj = _mm256_set1_pd(q[j]);
        std::size_t k = 0;
        for (; k + 4 <= n; k += 4) {
            __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(col + k), qj);
            __m256d acc = _mm256_loadu_pd(out + k);
            acc = _mm256_fmadd_pd(diff, diff, acc);
            _mm256_storeu_pd(out + k, acc);
        }
        for (; k < n; ++k) {
            const double diff = col[k] - q[j];
            out[k] += diff * diff;
        }
    }
}

}  // namespace

const Kernels* avx2_kernels() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) {
        return nullptr;
    }
    static const Kernels k = {
        "avx2",
        gemv_f32_avx2,
        gemv_t_f32_avx2,
        ger_f32_avx2,
        axpy_f32_avx2,
        relu_f32_avx2,
        dot_f32_avx2,
        sum_abs_diff_f32_avx2,
        sqdist_f64_avx2,
        sqdist_batch_f64_avx2,
    };
    return &k;
}

}  // namespace pivnet::kernels

#else

namespace pivnet::kernels {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace pivnet::kernels

#endif
