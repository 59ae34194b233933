#pragma once

#include <cstddef>

// Data-parallel inner loops behind the network engine and the distance scans.
// Two implementations share one table: portable scalar reference kernels and
// AVX2+FMA variants. The active table is resolved once at startup from CPU
// features; PIVNET_KERNELS=scalar|avx2 overrides the choice. The two are
// equivalence-tested against each other (accumulation order differs, so the
// tests compare within a tolerance).

namespace pivnet::kernels {

struct Kernels {
    const char* name;

    // y[i] = sum_j w[i*cols + j] * x[j] + b[i], w row-major (rows x cols).
    void (*gemv_f32)(const float* w, const float* x, const float* b, float* y,
                     std::size_t rows, std::size_t cols);
    // y[j] = sum_i w[i*cols + j] * x[i]  (transposed apply, same storage).
    void (*gemv_t_f32)(const float* w, const float* x, float* y,
                       std::size_t rows, std::size_t cols);
    // a[i*cols + j] += alpha * x[i] * y[j]  (rank-1 update).
    void (*ger_f32)(float* a, const float* x, const float* y, float alpha,
                    std::size_t rows, std::size_t cols);
    // y[i] += alpha * x[i].
    void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
    // x[i] = max(x[i], 0).
    void (*relu_f32)(float* x, std::size_t n);
    float (*dot_f32)(const float* a, const float* b, std::size_t n);
    // sum_i |a[i] - b[i]|.
    float (*sum_abs_diff_f32)(const float* a, const float* b, std::size_t n);

    // Squared Euclidean distance between two d-vectors.
    double (*sqdist_f64)(const double* a, const double* b, std::size_t d);
    // out[i] = squared distance from q to point i of a structure-of-arrays
    // block: soa[j*n + i] is coordinate j of point i.
    void (*sqdist_batch_f64)(const double* q, const double* soa, std::size_t n,
                             std::size_t d, double* out);
};

const Kernels& scalar_kernels();

// Nullptr when the build or the CPU lacks AVX2+FMA.
const Kernels* avx2_kernels();

// The table every caller goes through.
const Kernels& active();

}  // namespace pivnet::kernels
