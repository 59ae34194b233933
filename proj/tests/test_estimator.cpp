#include <doctest.h>

#include <filesystem>
#include <memory>

#include "pivnet/dataset.hpp"
#include "pivnet/error.hpp"
#include "pivnet/estimator.hpp"
#include "pivnet/io.hpp"
#include "pivnet/metrics.hpp"
#include "pivnet/trainer.hpp"
#include "test_support.hpp"

using namespace pivnet;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const PivotGrid> make_grid(const Dataset& data, std::uint32_t c,
                                           std::uint32_t k_max) {
    const KdTree tree(data);
    return std::make_shared<PivotGrid>(PivotGrid::build(data, c, k_max, tree));
}

}  // namespace

TEST_CASE("feature layouts have the documented widths") {
    CHECK(feature_width(EstimatorKind::PivNet, 2, 50) == 53);
    CHECK(feature_width(EstimatorKind::QueryNet, 5, 50) == 5);
    CHECK(feature_width(EstimatorKind::PivNetItr, 3, 50) == 6);
}

TEST_CASE("assemble_features: PivNet layout and pivot coincidence") {
    const auto data = testsup::random_dataset(200, 2, 40);
    const auto grid = make_grid(data, 4, 5);

    const auto piv = grid->pivot(6);
    const auto f = assemble_features(EstimatorKind::PivNet, piv.location, *grid);
    REQUIRE(f.size() == 2 + 1 + 5);
    CHECK(f[0] == piv.location[0]);
    CHECK(f[1] == piv.location[1]);
    CHECK(f[2] == 0.0);  // dist(q, p) at the pivot itself
    for (std::size_t k = 0; k < 5; ++k) CHECK(f[3 + k] == piv.knn_distances[k]);
}

TEST_CASE("assemble_features: PivNet-itr requires k, QueryNet is coords only") {
    const auto data = testsup::random_dataset(100, 2, 41);
    const auto grid = make_grid(data, 4, 5);
    const std::vector<double> q = {0.4, 0.4};

    CHECK_THROWS_AS(assemble_features(EstimatorKind::PivNetItr, q, *grid), ValidationError);

    const auto f = assemble_features(EstimatorKind::PivNetItr, q, *grid, 3);
    REQUIRE(f.size() == 2 + 3);
    CHECK(f[2] == 3.0);
    CHECK(f[4] == grid->pivot_vector(grid->locate(q))[2]);

    const auto fq = assemble_features(EstimatorKind::QueryNet, q, *grid);
    CHECK(fq == std::vector<double>{0.4, 0.4});

    CHECK_THROWS_AS(assemble_features(EstimatorKind::PivNet,
                                      std::vector<double>{0.4}, *grid),
                    ValidationError);
}

TEST_CASE("fit_normalization: degenerate column, identity case, round-trip") {
    // Two features: constant 7, and spanning [0,1] exactly.
    const std::vector<double> feats = {7, 0.0, 7, 1.0, 7, 0.25};
    const std::vector<double> targets = {2.0, 4.0, 1.0};
    const auto norm = fit_normalization(feats, 3, 2, targets);
    CHECK(norm.offset[0] == 7.0);
    CHECK(norm.scale[0] == 1.0);  // degenerate column maps to zero
    CHECK(norm.offset[1] == 0.0);
    CHECK(norm.scale[1] == 1.0);  // already [0,1]: identity
    CHECK(norm.target_scale == 4.0);

    float out[2];
    norm.apply(std::vector<double>{7.0, 0.25}, out);
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == 0.25f);

    // Round-trip raw -> normalized -> raw within 1e-6 relative.
    const std::vector<double> raws = {3.0, -17.5, 123.456};
    const std::vector<double> raw_targets = {0.5, 9.25, 3.75};
    const auto n2 = fit_normalization(raws, 3, 1, raw_targets);
    for (double r : raws) {
        const double normed = (r - n2.offset[0]) / n2.scale[0];
        const double back = normed * n2.scale[0] + n2.offset[0];
        CHECK(back == doctest::Approx(r).epsilon(1e-6));
    }
    CHECK_THROWS_AS(fit_normalization({}, 0, 2, {}), ValidationError);
}

TEST_CASE("Pivot estimator reproduces pivot_bound exactly") {
    const auto data = testsup::random_dataset(500, 2, 42);
    const auto grid = make_grid(data, 8, 10);
    const Estimator est(EstimatorKind::Pivot, 10, 2, grid, std::nullopt, Normalization{});

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> q = {u(rng), u(rng)};
        const auto dv = est.estimate(q);
        REQUIRE(dv.size() == 10);
        for (std::size_t k = 1; k <= 10; ++k) {
            CHECK(dv[k - 1] == grid->pivot_bound(q, k));
        }
    }
}

TEST_CASE("estimator construction validates its requirements") {
    const auto data = testsup::random_dataset(50, 2, 43);
    const auto grid = make_grid(data, 2, 3);
    CHECK_THROWS_AS(Estimator(EstimatorKind::Pivot, 3, 2, nullptr, std::nullopt,
                              Normalization{}),
                    ValidationError);
    CHECK_THROWS_AS(Estimator(EstimatorKind::PivNet, 3, 2, grid, std::nullopt,
                              Normalization{}),
                    ValidationError);
}

TEST_CASE("network estimator output: length k_max, non-negative, isotonic option") {
    const auto data = testsup::random_dataset(400, 2, 44);
    const KdTree tree(data);
    const auto grid = make_grid(data, 4, 6);
    const Partition part = partition(data, 40, 10, 3);
    const KdTree ref_tree(part.reference_set);
    const auto ref_grid = std::make_shared<PivotGrid>(
        PivotGrid::build(part.reference_set, 4, 6, ref_tree));
    const auto corpus = build_corpus(part, *ref_grid, ref_tree, 40, 6, 3);

    EstimatorTrainConfig cfg;
    cfg.hidden = {16, 16, 8};
    cfg.sgd.learning_rate = 0.05;
    cfg.sgd.batch_size = 16;
    cfg.sgd.max_epochs = 10;
    cfg.sgd.seed = 3;
    auto trained = train_estimator(EstimatorKind::PivNet, corpus, ref_grid, cfg);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> q = {u(rng), u(rng)};
        const auto dv = trained.estimator.estimate(q);
        REQUIRE(dv.size() == 6);
        for (double v : dv) CHECK(v >= 0.0);
    }

    trained.estimator.set_isotonic(true);
    const auto dv = trained.estimator.estimate(std::vector<double>{0.5, 0.5});
    for (std::size_t k = 1; k < dv.size(); ++k) CHECK(dv[k] >= dv[k - 1]);
}

TEST_CASE("trained PivNet beats the Pivot baseline on held-out queries") {
    // Coarse cells (c=8) handicap the triangle-inequality baseline; the
    // network has to learn only a modest correction to win.
    const Bbox box = {{0, 1}, {0, 1}};
    const auto data = gen_gaussian_mixture(6000, 5, 2024, box);
    const Partition part = partition(data, 1500, 400, 9);
    const KdTree tree(part.reference_set);
    const auto grid = std::make_shared<PivotGrid>(
        PivotGrid::build(part.reference_set, 8, 10, tree, PivotGrid::kDefaultBudgetBytes, 2));
    const auto corpus = build_corpus(part, *grid, tree, 1500, 10, 9, 2);

    EstimatorTrainConfig cfg;
    cfg.hidden = {64, 64, 32};
    cfg.sgd.learning_rate = 0.05;
    cfg.sgd.batch_size = 100;
    cfg.sgd.max_epochs = 60;
    cfg.sgd.patience = 10;
    cfg.sgd.seed = 1;
    const auto trained = train_estimator(EstimatorKind::PivNet, corpus, grid, cfg);

    const Estimator pivot(EstimatorKind::Pivot, 10, 2, grid, std::nullopt, Normalization{});

    const auto truth = exact_ground_truth(part.test_queries, tree, 10, 2);
    double mae_net = 0.0, mae_pivot = 0.0;
    for (std::size_t i = 0; i < part.test_queries.size(); ++i) {
        std::span<const double> gt(truth.data() + i * 10, 10);
        mae_net += mae(gt, trained.estimator.estimate(part.test_queries[i]));
        mae_pivot += mae(gt, pivot.estimate(part.test_queries[i]));
    }
    MESSAGE("PivNet MAE sum: " << mae_net << ", Pivot MAE sum: " << mae_pivot);
    CHECK(mae_net < mae_pivot);
}

TEST_CASE("estimator persistence round-trips estimates bit-exactly") {
    const auto data = testsup::random_dataset(300, 2, 46);
    const Partition part = partition(data, 60, 20, 5);
    const KdTree tree(part.reference_set);
    const auto grid = std::make_shared<PivotGrid>(
        PivotGrid::build(part.reference_set, 4, 5, tree));
    const auto corpus = build_corpus(part, *grid, tree, 60, 5, 5);

    EstimatorTrainConfig cfg;
    cfg.hidden = {8, 8};
    cfg.sgd.max_epochs = 5;
    cfg.sgd.batch_size = 32;
    cfg.sgd.seed = 8;
    const auto trained = train_estimator(EstimatorKind::PivNet, corpus, grid, cfg);

    const fs::path dir = fs::temp_directory_path() / "pivnet_est_roundtrip";
    fs::create_directories(dir);
    const fs::path grid_path = dir / "grid.bin";
    const fs::path est_path = dir / "est.bin";
    grid->save(grid_path);
    const std::uint64_t sum = fnv1a64_file(grid_path);
    trained.estimator.save(est_path, "grid.bin", sum);

    EstimatorLoadResult loaded = Estimator::load(est_path);
    CHECK(loaded.grid_path == "grid.bin");
    CHECK(loaded.grid_checksum == sum);
    loaded.estimator.attach_grid(std::make_shared<PivotGrid>(PivotGrid::load(grid_path)));

    // The reloaded grid is float-quantized, so compare against a fresh
    // estimator over the same reloaded grid: the persisted model itself must
    // be bit-exact.
    const auto reload_grid = std::make_shared<PivotGrid>(PivotGrid::load(grid_path));
    Estimator fresh(trained.estimator.kind(), trained.estimator.k_max(),
                    trained.estimator.dim(), reload_grid,
                    *trained.estimator.model(), trained.estimator.normalization());

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::vector<double> q = {u(rng), u(rng)};
        const auto a = loaded.estimator.estimate(q);
        const auto b = fresh.estimate(q);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    }
}

TEST_CASE("PivNet-itr estimates one k per forward pass") {
    const auto data = testsup::random_dataset(250, 2, 47);
    const Partition part = partition(data, 50, 10, 6);
    const KdTree tree(part.reference_set);
    const auto grid = std::make_shared<PivotGrid>(
        PivotGrid::build(part.reference_set, 4, 4, tree));
    const auto corpus = build_corpus(part, *grid, tree, 50, 4, 6);

    EstimatorTrainConfig cfg;
    cfg.hidden = {8, 8};
    cfg.sgd.max_epochs = 3;
    cfg.sgd.batch_size = 64;
    cfg.sgd.seed = 2;
    const auto trained = train_estimator(EstimatorKind::PivNetItr, corpus, grid, cfg);
    CHECK(trained.estimator.model()->input_size() == 2 + 3);
    CHECK(trained.estimator.model()->output_size() == 1);

    const auto dv = trained.estimator.estimate(std::vector<double>{0.5, 0.5});
    CHECK(dv.size() == 4);
    for (double v : dv) CHECK(v >= 0.0);
}
