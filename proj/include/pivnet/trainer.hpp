#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "pivnet/dataset.hpp"
#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/mlp.hpp"
#include "pivnet/pivot_grid.hpp"

namespace pivnet {

// Sampled + augmented training queries with exact ground-truth distance
// vectors against the reference set, and the seeded 80/20 split.
struct TrainingCorpus {
    Points queries;
    std::uint32_t k_max = 0;
    std::vector<double> ground_truth;  // queries.size() x k_max, row-major
    std::vector<std::uint32_t> train_idx;
    std::vector<std::uint32_t> val_idx;

    std::span<const double> truth_row(std::size_t i) const {
        return {ground_truth.data() + i * k_max, k_max};
    }

    void save(const std::filesystem::path& path) const;
    static TrainingCorpus load(const std::filesystem::path& path);
};

TrainingCorpus build_corpus(const Partition& part, const PivotGrid& grid,
                            const KdTree& tree, std::size_t n_augment,
                            std::uint32_t k_max, std::uint64_t seed,
                            std::size_t threads = 1);

// Normalized f32 feature/target matrices for one estimator kind. PivNet-itr
// expands to the (query, k) pair set.
struct FeatureSet {
    Matrix train_x, train_y, val_x, val_y;
    Normalization norm;
};

// grid may be null for QueryNet (coordinates-only features).
FeatureSet features_for(EstimatorKind kind, const TrainingCorpus& corpus,
                        const PivotGrid* grid);

struct TrainedEstimator {
    Estimator estimator;
    TrainResult result;
};

struct EstimatorTrainConfig {
    TrainConfig sgd;
    std::vector<std::uint32_t> hidden = {128, 128, 32};
};

// Per-kind training defaults. The per-k variant sees k_max times more rows
// per epoch, so its epoch budget is proportionally smaller.
EstimatorTrainConfig default_train_config(EstimatorKind kind);

TrainedEstimator train_estimator(EstimatorKind kind, const TrainingCorpus& corpus,
                                 std::shared_ptr<const PivotGrid> grid,
                                 const EstimatorTrainConfig& cfg);

// Exact k_max-NN vectors for a query set (the evaluation ground truth).
std::vector<double> exact_ground_truth(const Points& queries, const KdTree& tree,
                                       std::uint32_t k_max, std::size_t threads = 1);

}  // namespace pivnet
