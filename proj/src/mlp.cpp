#include "pivnet/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace pivnet {

MlpModel mlp_init(std::span<const std::uint32_t> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ValidationError("init: need at least 2 layers");
    for (auto s : layer_sizes) {
        if (s < 1) throw ValidationError("init: layer sizes must be >= 1");
    }
    MlpModel model;
    model.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t rows = layer_sizes[l + 1];
        const std::size_t cols = layer_sizes[l];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
        std::vector<float> w(rows * cols);
        for (auto& x : w) x = static_cast<float>(dist(rng));
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(rows, 0.0f);
    }
    return model;
}

namespace {

// Gradient accumulators mirroring the model's parameter layout.
struct Grads {
    std::vector<std::vector<float>> w;
    std::vector<std::vector<float>> b;

    explicit Grads(const MlpModel& m) {
        for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
            w.emplace_back(m.weights[l].size(), 0.0f);
            b.emplace_back(m.biases[l].size(), 0.0f);
        }
    }
    void zero() {
        for (auto& v : w) std::fill(v.begin(), v.end(), 0.0f);
        for (auto& v : b) std::fill(v.begin(), v.end(), 0.0f);
    }
};

// Backprop for one sample; returns the sample loss. delta/scratch sized by
// caller. Subgradient of |.| at 0 is taken as 0.
double backward_sample(const MlpModel& model, std::span<const float> target,
                       MlpWorkspace& ws, Grads& grads,
                       std::vector<float>& delta, std::vector<float>& scratch) {
    const std::size_t L = model.layer_count() - 1;
    const std::size_t out_dim = model.output_size();
    const auto& out = ws.acts[L];

    double loss = 0.0;
    delta.resize(out_dim);
    const float inv_out = 1.0f / static_cast<float>(out_dim);
    for (std::size_t i = 0; i < out_dim; ++i) {
        const float r = out[i] - target[i];
        loss += std::fabs(static_cast<double>(r));
        delta[i] = r > 0.0f ? inv_out : (r < 0.0f ? -inv_out : 0.0f);
    }
    loss /= static_cast<double>(out_dim);

    for (std::size_t l = L; l-- > 0;) {
        const std::size_t rows = model.layer_sizes[l + 1];
        const std::size_t cols = model.layer_sizes[l];
        detail::ger<float>(grads.w[l].data(), delta.data(), ws.acts[l].data(), 1.0f,
                           rows, cols);
        detail::axpy<float>(1.0f, delta.data(), grads.b[l].data(), rows);
        if (l == 0) break;
        scratch.resize(cols);
        detail::gemv_t<float>(model.weights[l].data(), delta.data(), scratch.data(),
                              rows, cols);
        // ReLU mask: activation > 0 iff pre-activation > 0.
        for (std::size_t j = 0; j < cols; ++j) {
            scratch[j] = ws.acts[l][j] > 0.0f ? scratch[j] : 0.0f;
        }
        delta.swap(scratch);
    }
    return loss;
}

}  // namespace

double mean_l1_over(const MlpModel& model, const Matrix& x, const Matrix& y) {
    MlpWorkspace ws;
    ws.resize(model);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        mlp_forward_into<float>(model, x.row(i), ws);
        acc += l1_loss<float>(ws.acts.back(), y.row(i));
    }
    return x.rows == 0 ? 0.0 : acc / static_cast<double>(x.rows);
}

TrainResult mlp_train(MlpModel& model, const Matrix& train_x, const Matrix& train_y,
                      const Matrix& val_x, const Matrix& val_y, const TrainConfig& cfg) {
    if (train_x.rows != train_y.rows || val_x.rows != val_y.rows) {
        throw ValidationError("train: row counts mismatch");
    }
    if (train_x.cols != model.input_size() || train_y.cols != model.output_size()) {
        throw ValidationError("train: matrix widths do not match model shape");
    }
    if (!(cfg.learning_rate >= 0.0)) throw ValidationError("train: negative learning rate");
    if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (cfg.patience < 1) throw ValidationError("train: patience must be >= 1");

    const bool has_val = val_x.rows > 0;
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::uint32_t> order(train_x.rows);
    std::iota(order.begin(), order.end(), 0u);

    const std::size_t workers = std::max<std::size_t>(1, cfg.threads);
    std::vector<MlpWorkspace> ws(workers);
    std::vector<Grads> grads;
    for (std::size_t t = 0; t < workers; ++t) {
        ws[t].resize(model);
        grads.emplace_back(model);
    }
    std::vector<std::vector<float>> delta(workers), scratch(workers);
    std::vector<double> worker_loss(workers);

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    MlpModel best_model = model;
    std::size_t stale = 0;
    double lr = cfg.learning_rate;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch_n = stop - start;
            // Fixed contiguous sample ranges per worker; partial gradients
            // are applied in worker order, so the result does not depend on
            // scheduling.
            const std::size_t per = (batch_n + workers - 1) / workers;
            auto run_range = [&](std::size_t t) {
                const std::size_t lo = start + t * per;
                const std::size_t hi = std::min(stop, lo + per);
                grads[t].zero();
                worker_loss[t] = 0.0;
                for (std::size_t i = lo; i < hi; ++i) {
                    mlp_forward_into<float>(model, train_x.row(order[i]), ws[t]);
                    worker_loss[t] += backward_sample(model, train_y.row(order[i]),
                                                      ws[t], grads[t], delta[t],
                                                      scratch[t]);
                }
            };
            if (workers == 1 || batch_n < 2 * workers) {
                grads[0].zero();
                worker_loss[0] = 0.0;
                for (std::size_t i = start; i < stop; ++i) {
                    mlp_forward_into<float>(model, train_x.row(order[i]), ws[0]);
                    worker_loss[0] += backward_sample(model, train_y.row(order[i]),
                                                      ws[0], grads[0], delta[0],
                                                      scratch[0]);
                }
                for (std::size_t t = 1; t < workers; ++t) {
                    grads[t].zero();
                    worker_loss[t] = 0.0;
                }
            } else {
                std::vector<std::thread> pool;
                for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run_range, t);
                run_range(0);
                for (auto& th : pool) th.join();
            }
            const float step = static_cast<float>(-lr / static_cast<double>(batch_n));
            for (std::size_t t = 0; t < workers; ++t) {
                epoch_loss += worker_loss[t];
                for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
                    detail::axpy<float>(step, grads[t].w[l].data(),
                                        model.weights[l].data(), model.weights[l].size());
                    detail::axpy<float>(step, grads[t].b[l].data(),
                                        model.biases[l].data(), model.biases[l].size());
                }
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        result.train_loss.push_back(epoch_loss);

        double watched = epoch_loss;
        if (has_val) {
            const double vl = mean_l1_over(model, val_x, val_y);
            result.val_loss.push_back(vl);
            watched = vl;
        }
        if (!std::isfinite(watched) || !std::isfinite(epoch_loss)) {
            throw TrainingDiverged("train: non-finite loss at epoch " +
                                   std::to_string(epoch), epoch);
        }
        if (watched < best) {
            best = watched;
            best_model = model;
            result.best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
            if (stale >= cfg.patience) break;
            if (cfg.lr_patience > 0 && stale % cfg.lr_patience == 0) {
                lr *= cfg.lr_decay;
            }
        }
    }

    model = std::move(best_model);
    result.best_val_loss = best;
    return result;
}

namespace {

// Double twin of a float model; runs the same templated code path.
MlpT<double> to_double(const MlpModel& m) {
    MlpT<double> d;
    d.layer_sizes = m.layer_sizes;
    for (const auto& w : m.weights) d.weights.emplace_back(w.begin(), w.end());
    for (const auto& b : m.biases) d.biases.emplace_back(b.begin(), b.end());
    return d;
}

struct ForwardTrace {
    double loss = 0.0;
    // Sign pattern of residuals and ReLU activity; used for kink detection.
    std::vector<int> pattern;
};

ForwardTrace traced_forward(const MlpT<double>& model, std::span<const double> input,
                            std::span<const double> target, MlpWorkspaceT<double>& ws) {
    mlp_forward_into<double>(model, input, ws);
    ForwardTrace t;
    const std::size_t L = model.layer_count() - 1;
    for (std::size_t l = 1; l < L; ++l) {
        for (double a : ws.acts[l]) t.pattern.push_back(a > 0.0 ? 1 : 0);
    }
    const auto& out = ws.acts[L];
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = out[i] - target[i];
        t.loss += std::fabs(r);
        t.pattern.push_back(r > 0.0 ? 1 : (r < 0.0 ? -1 : 0));
    }
    t.loss /= static_cast<double>(out.size());
    return t;
}

void analytic_grad(const MlpT<double>& model, std::span<const double> input,
                   std::span<const double> target,
                   std::vector<std::vector<double>>& gw,
                   std::vector<std::vector<double>>& gb) {
    MlpWorkspaceT<double> ws;
    mlp_forward_into<double>(model, input, ws);
    const std::size_t L = model.layer_count() - 1;
    const std::size_t out_dim = model.output_size();
    std::vector<double> delta(out_dim), scratch;
    const double inv_out = 1.0 / static_cast<double>(out_dim);
    for (std::size_t i = 0; i < out_dim; ++i) {
        const double r = ws.acts[L][i] - target[i];
        delta[i] = r > 0.0 ? inv_out : (r < 0.0 ? -inv_out : 0.0);
    }
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t rows = model.layer_sizes[l + 1];
        const std::size_t cols = model.layer_sizes[l];
        detail::ger<double>(gw[l].data(), delta.data(), ws.acts[l].data(), 1.0, rows, cols);
        detail::axpy<double>(1.0, delta.data(), gb[l].data(), rows);
        if (l == 0) break;
        scratch.assign(cols, 0.0);
        detail::gemv_t<double>(model.weights[l].data(), delta.data(), scratch.data(),
                               rows, cols);
        for (std::size_t j = 0; j < cols; ++j) {
            scratch[j] = ws.acts[l][j] > 0.0 ? scratch[j] : 0.0;
        }
        delta.swap(scratch);
    }
}

}  // namespace

double grad_check(const MlpModel& model, std::span<const float> input,
                  std::span<const float> target, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("grad_check: epsilon must be positive");
    MlpT<double> m = to_double(model);
    std::vector<double> in(input.begin(), input.end());
    std::vector<double> tg(target.begin(), target.end());

    std::vector<std::vector<double>> gw, gb;
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        gw.emplace_back(m.weights[l].size(), 0.0);
        gb.emplace_back(m.biases[l].size(), 0.0);
    }
    analytic_grad(m, in, tg, gw, gb);

    MlpWorkspaceT<double> ws;
    double max_rel = 0.0;
    auto probe = [&](double* param, double analytic) {
        const double saved = *param;
        *param = saved + epsilon;
        const ForwardTrace plus = traced_forward(m, in, tg, ws);
        *param = saved - epsilon;
        const ForwardTrace minus = traced_forward(m, in, tg, ws);
        *param = saved;
        // Perturbation crossed a kink: the loss is not differentiable here.
        if (plus.pattern != minus.pattern) return;
        const double numeric = (plus.loss - minus.loss) / (2.0 * epsilon);
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-10});
        max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    };

    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
            probe(&m.weights[l][i], gw[l][i]);
        }
        for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
            probe(&m.biases[l][i], gb[l][i]);
        }
    }
    return max_rel;
}

}  // namespace pivnet
