#pragma once

#include <cstdint>
#include <vector>

#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

enum class DodVariant : std::uint8_t {
    RadiusCount = 0,  // (r,k): k-th NN distance > r
    TopN = 1,         // (N,k): N largest k-th NN distances
};

struct DodParams {
    DodVariant variant = DodVariant::RadiusCount;
    std::size_t k = 50;
    double r = 0.0;
    std::size_t top_n = 0;
};

// k-th NN distance of every dataset point. The exact path excludes the point
// itself; the estimator path reads output entry k-1 for a query placed at
// the point, matching its training-time semantics.
std::vector<double> kth_nn_distances_exact(const Dataset& data, const KdTree& tree,
                                           std::size_t k, std::size_t threads = 1);
std::vector<double> kth_nn_distances_estimated(const Dataset& data, const Estimator& est,
                                               std::size_t k, std::size_t threads = 1);

// Flagged indices, ascending. Top-N ties break by ascending point index.
std::vector<std::uint32_t> detect_outliers(const std::vector<double>& kth_dists,
                                           const DodParams& params);

}  // namespace pivnet
