#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pivnet/types.hpp"

namespace pivnet {

struct Partition {
    Dataset reference_set;
    Points train_queries;
    Points test_queries;
    // Indices into the source dataset, for disjointness checks.
    std::vector<std::uint32_t> ref_indices;
    std::vector<std::uint32_t> train_indices;
    std::vector<std::uint32_t> test_indices;
};

struct CsvOptions {
    bool has_header = false;
    bool drop_invalid = false;
};

struct CsvLoadResult {
    Dataset data;
    std::size_t dropped_rows = 0;
};

// One point per row, comma-separated decimal floats. Rows with missing or
// non-numeric cells are errors unless drop_invalid is set.
CsvLoadResult load_csv(const std::filesystem::path& path, const CsvOptions& opt = {});

// Shortest round-trip formatting; reload is bit-exact.
void save_csv(const std::filesystem::path& path, const Points& pts);

Partition partition(const Dataset& data, std::size_t n_train, std::size_t n_test,
                    std::uint64_t seed);

// count i.i.d. uniform points inside the closed bbox.
Points augment_uniform(const Bbox& bbox, std::size_t count, std::uint64_t seed);

// Clustered synthetic data: each cluster is a Gaussian random walk from a
// start location drawn uniformly in `box`.
Dataset gen_random_walk_clusters(std::size_t n_clusters, std::size_t points_per_cluster,
                                 double step_scale, std::uint64_t seed,
                                 const Bbox& box);

// Isotropic Gaussian mixture inside `box`; component spreads drawn from
// [spread_lo, spread_hi] as a fraction of the box extent.
Dataset gen_gaussian_mixture(std::size_t n, std::size_t n_components, std::uint64_t seed,
                             const Bbox& box, double spread_lo = 0.01,
                             double spread_hi = 0.06);

}  // namespace pivnet
