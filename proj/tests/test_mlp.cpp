#include <doctest.h>

#include <cmath>
#include <random>

#include "pivnet/error.hpp"
#include "pivnet/mlp.hpp"

using namespace pivnet;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (float v : row) m.row(r)[c++] = v;
        ++r;
    }
    return m;
}

}  // namespace

TEST_CASE("init is deterministic and zero-biased") {
    const std::uint32_t sizes[] = {3, 2};
    const auto a = mlp_init(sizes, 99);
    const auto b = mlp_init(sizes, 99);
    CHECK(a.weights[0] == b.weights[0]);
    for (float v : a.biases[0]) CHECK(v == 0.0f);

    const auto c = mlp_init(sizes, 100);
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("init weight variance tracks 2/fan_in") {
    const std::uint32_t sizes[] = {512, 64};
    const auto m = mlp_init(sizes, 7);
    double mean = 0.0;
    for (float v : m.weights[0]) mean += v;
    mean /= static_cast<double>(m.weights[0].size());
    double var = 0.0;
    for (float v : m.weights[0]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.weights[0].size());
    const double want = 2.0 / 512.0;
    CHECK(var == doctest::Approx(want).epsilon(0.20));
}

TEST_CASE("init rejects bad shapes") {
    const std::uint32_t one[] = {4};
    CHECK_THROWS_AS(mlp_init(one, 1), ValidationError);
    const std::uint32_t zero[] = {4, 0, 2};
    CHECK_THROWS_AS(mlp_init(zero, 1), ValidationError);
}

TEST_CASE("forward: zero weights collapse to the output bias") {
    const std::uint32_t sizes[] = {3, 4, 2};
    auto m = mlp_init(sizes, 1);
    for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0f);
    m.biases[1] = {1.5f, -2.5f};
    const std::vector<float> in = {9.0f, -3.0f, 0.5f};
    const auto out = mlp_forward<float>(m, in);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 1.5f);
    CHECK(out[1] == -2.5f);
}

TEST_CASE("forward: a single weight layer is an exact affine map") {
    const std::uint32_t sizes[] = {2, 2};
    auto m = mlp_init(sizes, 1);
    m.weights[0] = {1.0f, 0.0f, 0.0f, 1.0f};
    m.biases[0] = {0.25f, -0.75f};
    const std::vector<float> in = {2.0f, 3.0f};
    const auto out = mlp_forward<float>(m, in);
    CHECK(out[0] == 2.25f);
    CHECK(out[1] == 2.25f);

    const auto again = mlp_forward<float>(m, in);
    CHECK(out == again);
}

TEST_CASE("forward validates input length") {
    const std::uint32_t sizes[] = {3, 2};
    const auto m = mlp_init(sizes, 1);
    CHECK_THROWS_AS(mlp_forward<float>(m, std::vector<float>{1.0f}), ValidationError);
}

TEST_CASE("ReLU sparsity: negative pre-activations leave the pure bias path") {
    const std::uint32_t sizes[] = {2, 3, 2};
    auto m = mlp_init(sizes, 1);
    // Large negative hidden biases force all hidden units off.
    std::fill(m.biases[0].begin(), m.biases[0].end(), -100.0f);
    m.biases[1] = {0.5f, 0.75f};
    const auto out = mlp_forward<float>(m, std::vector<float>{0.1f, 0.2f});
    CHECK(out[0] == 0.5f);
    CHECK(out[1] == 0.75f);
}

TEST_CASE("l1_loss basics") {
    const std::vector<float> a = {0.0f, 4.0f};
    const std::vector<float> b = {1.0f, 2.0f};
    CHECK(l1_loss<float>(a, a) == 0.0);
    CHECK(l1_loss<float>(a, b) == doctest::Approx(1.5));
    CHECK(l1_loss<float>(a, b) == l1_loss<float>(b, a));
    CHECK_THROWS_AS(l1_loss<float>(a, std::vector<float>{1.0f}), ValidationError);
}

TEST_CASE("grad_check: random small model") {
    const std::uint32_t sizes[] = {4, 5, 3};
    const auto m = mlp_init(sizes, 17);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> in(4), tg(3);
    for (auto& v : in) v = u(rng);
    for (auto& v : tg) v = u(rng);
    CHECK(grad_check(m, in, tg, 1e-5) < 1e-4);
}

TEST_CASE("grad_check: hand-computed single-parameter case") {
    // Model [1,1]: output = w*x + b; loss = |w*x + b - t|.
    // At x=2, t=1, w=1, b=0: residual 1 > 0, dL/dw = x = 2, dL/db = 1.
    const std::uint32_t sizes[] = {1, 1};
    auto m = mlp_init(sizes, 1);
    m.weights[0] = {1.0f};
    m.biases[0] = {0.0f};
    CHECK(grad_check(m, std::vector<float>{2.0f}, std::vector<float>{1.0f}, 1e-5) < 1e-10);

    // Zero input, zero target: residual = b. For b > 0 the bias gradient is
    // the L1 sign rule, +1.
    m.biases[0] = {0.5f};
    CHECK(grad_check(m, std::vector<float>{0.0f}, std::vector<float>{0.0f}, 1e-5) < 1e-10);
}

TEST_CASE("grad_check: discretization consistency across epsilons") {
    const std::uint32_t sizes[] = {3, 4, 2};
    const auto m = mlp_init(sizes, 23);
    const std::vector<float> in = {0.3f, -0.4f, 0.8f};
    const std::vector<float> tg = {0.1f, 0.9f};
    const double e4 = grad_check(m, in, tg, 1e-4);
    const double e6 = grad_check(m, in, tg, 1e-6);
    // Piecewise-linear loss: both should be near machine precision.
    CHECK(e4 < 1e-6);
    CHECK(e6 < 1e-4);
}

TEST_CASE("grad_check: 20 random configurations stay under 1e-4") {
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint32_t> sizes;
        const std::size_t layers = 2 + rng() % 3;
        for (std::size_t l = 0; l < layers; ++l) sizes.push_back(1 + rng() % 8);
        const auto m = mlp_init(sizes, rng());
        std::vector<float> in(sizes.front()), tg(sizes.back());
        for (auto& v : in) v = u(rng);
        for (auto& v : tg) v = u(rng);
        CHECK(grad_check(m, in, tg, 1e-5) < 1e-4);
    }
}

TEST_CASE("train fits y = 2x + 1") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Matrix x(256, 1), y(256, 1);
    for (std::size_t i = 0; i < 256; ++i) {
        const float xi = u(rng);
        x.row(i)[0] = xi;
        y.row(i)[0] = 2.0f * xi + 1.0f;
    }
    const std::uint32_t sizes[] = {1, 8, 1};
    auto m = mlp_init(sizes, 5);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;
    cfg.max_epochs = 400;
    cfg.patience = 400;
    cfg.seed = 5;
    mlp_train(m, x, y, Matrix(), Matrix(), cfg);
    CHECK(mean_l1_over(m, x, y) < 0.05);
}

TEST_CASE("train with learning_rate 0 leaves parameters unchanged") {
    Matrix x = from_rows({{0.5f}, {0.25f}});
    Matrix y = from_rows({{1.0f}, {2.0f}});
    const std::uint32_t sizes[] = {1, 4, 1};
    auto m = mlp_init(sizes, 6);
    const auto w0 = m.weights;
    const auto b0 = m.biases;
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 5;
    cfg.patience = 10;
    mlp_train(m, x, y, Matrix(), Matrix(), cfg);
    CHECK(m.weights == w0);
    CHECK(m.biases == b0);
}

TEST_CASE("train is bit-deterministic for a fixed seed") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Matrix x(64, 2), y(64, 1);
    for (std::size_t i = 0; i < 64; ++i) {
        x.row(i)[0] = u(rng);
        x.row(i)[1] = u(rng);
        y.row(i)[0] = x.row(i)[0] + x.row(i)[1];
    }
    const std::uint32_t sizes[] = {2, 6, 1};
    TrainConfig cfg;
    cfg.learning_rate = 0.02;
    cfg.batch_size = 16;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    cfg.seed = 77;

    auto m1 = mlp_init(sizes, 11);
    const auto r1 = mlp_train(m1, x, y, Matrix(), Matrix(), cfg);
    auto m2 = mlp_init(sizes, 11);
    const auto r2 = mlp_train(m2, x, y, Matrix(), Matrix(), cfg);
    CHECK(r1.train_loss == r2.train_loss);
    CHECK(m1.weights == m2.weights);
    CHECK(m1.biases == m2.biases);
}

TEST_CASE("one full-batch step decreases the loss on a smooth region") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<float> u(0.1f, 1.0f);
    Matrix x(128, 1), y(128, 1);
    for (std::size_t i = 0; i < 128; ++i) {
        const float xi = u(rng);
        x.row(i)[0] = xi;
        y.row(i)[0] = 2.0f * xi + 1.0f;
    }
    const std::uint32_t sizes[] = {1, 8, 1};
    auto m = mlp_init(sizes, 12);
    const double before = mean_l1_over(m, x, y);
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 128;  // full batch
    cfg.max_epochs = 1;
    cfg.patience = 1;
    mlp_train(m, x, y, Matrix(), Matrix(), cfg);
    CHECK(mean_l1_over(m, x, y) < before);
}

TEST_CASE("train aborts on divergence with the epoch number") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Matrix x(32, 1), y(32, 1);
    for (std::size_t i = 0; i < 32; ++i) {
        x.row(i)[0] = u(rng) * 1e10f;
        y.row(i)[0] = u(rng);
    }
    const std::uint32_t sizes[] = {1, 8, 1};
    auto m = mlp_init(sizes, 14);
    TrainConfig cfg;
    cfg.learning_rate = 1e30;
    cfg.max_epochs = 50;
    cfg.patience = 50;
    CHECK_THROWS_AS(mlp_train(m, x, y, Matrix(), Matrix(), cfg), TrainingDiverged);
}

TEST_CASE("best-checkpoint contract: returned model has the minimum recorded loss") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Matrix x(100, 2), y(100, 1), xv(30, 2), yv(30, 1);
    auto fill = [&](Matrix& mx, Matrix& my) {
        for (std::size_t i = 0; i < mx.rows; ++i) {
            mx.row(i)[0] = u(rng);
            mx.row(i)[1] = u(rng);
            my.row(i)[0] = std::sin(3.0f * mx.row(i)[0]) * mx.row(i)[1];
        }
    };
    fill(x, y);
    fill(xv, yv);
    const std::uint32_t sizes[] = {2, 16, 1};
    auto m = mlp_init(sizes, 16);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 10;
    cfg.max_epochs = 60;
    cfg.patience = 60;
    cfg.seed = 4;
    const auto res = mlp_train(m, x, y, xv, yv, cfg);
    REQUIRE(!res.val_loss.empty());
    double min_val = res.val_loss[0];
    for (double v : res.val_loss) min_val = std::min(min_val, v);
    CHECK(res.best_val_loss == min_val);
    CHECK(mean_l1_over(m, xv, yv) == doctest::Approx(min_val).epsilon(1e-12));
    CHECK(res.val_loss[res.best_epoch] == min_val);
}

TEST_CASE("train validates shapes") {
    const std::uint32_t sizes[] = {2, 1};
    auto m = mlp_init(sizes, 1);
    Matrix x(4, 3), y(4, 1);
    TrainConfig cfg;
    CHECK_THROWS_AS(mlp_train(m, x, y, Matrix(), Matrix(), cfg), ValidationError);
    Matrix x2(4, 2), y2(3, 1);
    CHECK_THROWS_AS(mlp_train(m, x2, y2, Matrix(), Matrix(), cfg), ValidationError);
}
