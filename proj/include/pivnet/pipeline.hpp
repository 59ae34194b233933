#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pivnet/dataset.hpp"
#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/pivot_grid.hpp"
#include "pivnet/trainer.hpp"

namespace pivnet {

// Held-out queries with exact ground truth, cached by prep for evaluation.
struct TestSet {
    Points queries;
    std::uint32_t k_max = 0;
    std::vector<double> ground_truth;  // queries.size() x k_max

    std::span<const double> truth_row(std::size_t i) const {
        return {ground_truth.data() + i * k_max, k_max};
    }

    void save(const std::filesystem::path& path) const;
    static TestSet load(const std::filesystem::path& path);
};

void save_partition(const std::filesystem::path& path, const Partition& part);
Partition load_partition(const std::filesystem::path& path);

struct PrepConfig {
    std::uint64_t seed = 1;
    std::uint32_t k_max = 50;
    std::uint32_t grid_c = 256;
    std::size_t n_train = 10000;
    std::size_t n_test = 1000;        // sampled; the same count is augmented
    std::size_t n_augment = 0;        // 0 = match n_train
    std::size_t leaf_size = 16;
    std::uint64_t budget_bytes = PivotGrid::kDefaultBudgetBytes;
    std::size_t threads = 1;
};

struct PrepArtifacts {
    Partition part;
    std::shared_ptr<const PivotGrid> grid;
    TrainingCorpus corpus;
    TestSet test;
};

// Partition, grid over the reference set, training corpus and test ground
// truth, all in memory.
PrepArtifacts run_prep(const Dataset& data, const PrepConfig& cfg);

// Writes partition.bin, grid.bin, corpus.bin, testset.bin and manifest.json
// with checksums under out_dir.
void write_prep_artifacts(const std::filesystem::path& out_dir, const PrepArtifacts& art);

struct PrepDir {
    Partition part;
    std::shared_ptr<const PivotGrid> grid;
    TrainingCorpus corpus;
    TestSet test;
    std::uint64_t grid_checksum = 0;
    std::filesystem::path grid_file;
};

// Loads the four artifacts back and verifies their manifest checksums.
PrepDir load_prep_dir(const std::filesystem::path& dir);

// Loads an estimator and attaches its grid after validating the recorded
// checksum against the grid file in prep_dir.
Estimator load_estimator_checked(const std::filesystem::path& est_path,
                                 const std::filesystem::path& prep_dir);

}  // namespace pivnet
