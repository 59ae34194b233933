#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pivnet/error.hpp"
#include "pivnet/kernels/kernels.hpp"

namespace pivnet {

// Fully connected regression network: affine + ReLU through the hidden
// layers, affine output. float is the production precision; the double
// instantiation runs the identical code for finite-difference verification.
template <typename T>
struct MlpT {
    std::vector<std::uint32_t> layer_sizes;
    // weights[l] is row-major (layer_sizes[l+1] x layer_sizes[l]).
    std::vector<std::vector<T>> weights;
    std::vector<std::vector<T>> biases;

    std::size_t layer_count() const { return layer_sizes.size(); }
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            n += weights[l].size() + biases[l].size();
        }
        return n;
    }
};

using MlpModel = MlpT<float>;

struct TrainConfig {
    double learning_rate = 0.02;
    std::size_t batch_size = 500;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    // Plateau step decay: halve the rate each time the watched loss stalls
    // for lr_patience epochs. 0 disables.
    double lr_decay = 0.5;
    std::size_t lr_patience = 5;
    // Batch-gradient workers. Per-thread partial gradients are reduced in
    // fixed order, so any fixed thread count gives bit-identical runs.
    std::size_t threads = 1;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch (empty when no val set)
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

namespace detail {

template <typename T>
void gemv(const T* w, const T* x, const T* b, T* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const T* wr = w + i * cols;
        T acc = 0;
        for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * x[j];
        y[i] = acc + b[i];
    }
}
template <>
inline void gemv<float>(const float* w, const float* x, const float* b, float* y,
                        std::size_t rows, std::size_t cols) {
    kernels::active().gemv_f32(w, x, b, y, rows, cols);
}

template <typename T>
void gemv_t(const T* w, const T* x, T* y, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const T* wr = w + i * cols;
        for (std::size_t j = 0; j < cols; ++j) y[j] += x[i] * wr[j];
    }
}
template <>
inline void gemv_t<float>(const float* w, const float* x, float* y, std::size_t rows,
                          std::size_t cols) {
    kernels::active().gemv_t_f32(w, x, y, rows, cols);
}

template <typename T>
void ger(T* a, const T* x, const T* y, T alpha, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        T* ar = a + i * cols;
        const T s = alpha * x[i];
        for (std::size_t j = 0; j < cols; ++j) ar[j] += s * y[j];
    }
}
template <>
inline void ger<float>(float* a, const float* x, const float* y, float alpha,
                       std::size_t rows, std::size_t cols) {
    kernels::active().ger_f32(a, x, y, alpha, rows, cols);
}

template <typename T>
void relu(T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0 ? x[i] : 0;
}
template <>
inline void relu<float>(float* x, std::size_t n) {
    kernels::active().relu_f32(x, n);
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
template <>
inline void axpy<float>(float alpha, const float* x, float* y, std::size_t n) {
    kernels::active().axpy_f32(alpha, x, y, n);
}

}  // namespace detail

// Per-layer activation storage reused across forward passes.
template <typename T>
struct MlpWorkspaceT {
    std::vector<std::vector<T>> acts;  // acts[0] = input copy, acts[L] = output

    void resize(const MlpT<T>& model) {
        acts.resize(model.layer_count());
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            acts[l].resize(model.layer_sizes[l]);
        }
    }

    bool fits(const MlpT<T>& model) const {
        if (acts.size() != model.layer_count()) return false;
        for (std::size_t l = 0; l < acts.size(); ++l) {
            if (acts[l].size() != model.layer_sizes[l]) return false;
        }
        return true;
    }
};

using MlpWorkspace = MlpWorkspaceT<float>;

template <typename T>
void mlp_forward_into(const MlpT<T>& model, std::span<const T> input,
                      MlpWorkspaceT<T>& ws) {
    if (input.size() != model.input_size()) {
        throw ValidationError("forward: input length mismatch");
    }
    if (!ws.fits(model)) ws.resize(model);
    std::copy(input.begin(), input.end(), ws.acts[0].begin());
    const std::size_t L = model.layer_count() - 1;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t rows = model.layer_sizes[l + 1];
        const std::size_t cols = model.layer_sizes[l];
        detail::gemv<T>(model.weights[l].data(), ws.acts[l].data(),
                        model.biases[l].data(), ws.acts[l + 1].data(), rows, cols);
        if (l + 1 < L) detail::relu<T>(ws.acts[l + 1].data(), rows);
    }
}

template <typename T>
std::vector<T> mlp_forward(const MlpT<T>& model, std::span<const T> input) {
    MlpWorkspaceT<T> ws;
    mlp_forward_into(model, input, ws);
    return ws.acts.back();
}

// Mean absolute difference across components.
template <typename T>
double l1_loss(std::span<const T> pred, std::span<const T> target) {
    if (pred.size() != target.size()) throw ValidationError("l1_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        acc += std::abs(static_cast<double>(pred[i]) - static_cast<double>(target[i]));
    }
    return acc / static_cast<double>(pred.size());
}

MlpModel mlp_init(std::span<const std::uint32_t> layer_sizes, std::uint64_t seed);

// Mini-batch SGD on the mean-per-component L1 loss, seeded per-epoch
// reshuffle, early stop on the validation loss, best checkpoint restored.
TrainResult mlp_train(MlpModel& model, const Matrix& train_x, const Matrix& train_y,
                      const Matrix& val_x, const Matrix& val_y, const TrainConfig& cfg);

// Max relative error between analytic and central-difference gradients of
// l1_loss, evaluated in double precision. Parameters whose perturbation
// crosses a ReLU or |.| kink are skipped.
double grad_check(const MlpModel& model, std::span<const float> input,
                  std::span<const float> target, double epsilon = 1e-5);

double mean_l1_over(const MlpModel& model, const Matrix& x, const Matrix& y);

}  // namespace pivnet
