#pragma once

#include <cstdint>
#include <vector>

#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

constexpr std::int32_t kNoise = -1;

struct DpcResult {
    std::vector<std::uint32_t> rho;      // neighbors within d_cut, self excluded
    std::vector<double> delta;           // distance to nearest denser point
    std::vector<std::int64_t> dependent; // -1 for the global density peak
    std::vector<std::int32_t> label;     // cluster id or kNoise
    std::vector<std::uint32_t> centers;
    std::size_t noise_count = 0;
};

// Density-peaks clustering. Density ties are resolved by index (lower index
// counts as denser); the global peak takes delta = max pairwise distance.
// Centers are non-noise points with delta >= delta_min; labels propagate
// from centers along dependent links in decreasing-density order.
DpcResult dpc_cluster(const Dataset& data, const KdTree& tree, double d_cut,
                      std::uint32_t rho_min, double delta_min, std::size_t threads = 1);

// The m-th largest rho_min-NN distance over all points: the radius that
// separates the m known noise points from the rest.
double estimate_dcut_estimated(const Estimator& est, const Dataset& data,
                               std::uint32_t rho_min, std::size_t m,
                               std::size_t threads = 1);
double estimate_dcut_exact(const Dataset& data, const KdTree& tree,
                           std::uint32_t rho_min, std::size_t m,
                           std::size_t threads = 1);

// Exact diameter; convex hull path for 2D, pairwise scan otherwise.
double max_pairwise_distance(const Dataset& data, std::size_t threads = 1);

// Noise labels (-1) count as one extra cluster.
double adjusted_rand_index(const std::vector<std::int32_t>& a,
                           const std::vector<std::int32_t>& b);

}  // namespace pivnet
