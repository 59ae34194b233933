#include "pivnet/kernels/kernels.hpp"

#include <cmath>

namespace pivnet::kernels {
namespace {

void gemv_f32_scalar(const float* w, const float* x, const float* b, float* y,
                     std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const float* wr = w + i * cols;
        float acc = 0.0f;
        for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * x[j];
        y[i] = acc + b[i];
    }
}

void gemv_t_f32_scalar(const float* w, const float* x, float* y,
                       std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0f;
    for (std::size_t i = 0; i < rows; ++i) {
        const float* wr = w + i * cols;
        const float xi = x[i];
        for (std::size_t j = 0; j < cols; ++j) y[j] += xi * wr[j];
    }
}

void ger_f32_scalar(float* a, const float* x, const float* y, float alpha,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        float* ar = a + i * cols;
        const float s = alpha * x[i];
        for (std::size_t j = 0; j < cols; ++j) ar[j] += s * y[j];
    }
}

void axpy_f32_scalar(float alpha, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void relu_f32_scalar(float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

float dot_f32_scalar(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float sum_abs_diff_f32_scalar(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

double sqdist_f64_scalar(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

void sqdist_batch_f64_scalar(const double* q, const double* soa, std::size_t n,
                             std::size_t d, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double qj = q[j];
        const double* col = soa + j * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = col[i] - qj;
            out[i] += diff * diff;
        }
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",
        gemv_f32_scalar,
        gemv_t_f32_scalar,
        ger_f32_scalar,
        axpy_f32_scalar,
        relu_f32_scalar,
        dot_f32_scalar,
        sum_abs_diff_f32_scalar,
        sqdist_f64_scalar,
        sqdist_batch_f64_scalar,
    };
    return k;
}

}  // namespace pivnet::kernels
