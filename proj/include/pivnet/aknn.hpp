#pragma once

#include <span>

#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

// Approximate k-NN: seed the branch-and-bound radius with the estimated k-th
// NN distance instead of infinity. May return fewer than k neighbors when
// the estimate undershoots; a non-positive estimate yields an empty result.
NeighborList aknn_search(const KdTree& tree, const Estimator& est,
                         std::span<const double> q, std::size_t k);

// |found ∩ exact top-k| / k.
double recall_against_exact(const NeighborList& found, const NeighborList& exact);

}  // namespace pivnet
