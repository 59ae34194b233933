#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pivnet/types.hpp"

namespace pivnet {

// Exact k-NN over an immutable dataset. Median split on the widest-spread
// dimension, branch-and-bound queries with (distance, index) tie-breaking so
// results match a linear scan exactly. The tree borrows the dataset; the
// caller keeps it alive. Queries are safe from multiple threads.
class KdTree {
public:
    static constexpr std::uint32_t kNoExclude = std::numeric_limits<std::uint32_t>::max();

    KdTree(const Dataset& data, std::size_t leaf_size = 16);

    // The k smallest distances, ties broken by ascending point index.
    // exclude skips one reference index (self-queries in outlier detection).
    NeighborList knn(std::span<const double> q, std::size_t k,
                     std::uint32_t exclude = kNoExclude) const;

    // Branch-and-bound with the pruning radius seeded at tau instead of
    // infinity. Returns every neighbor found within the final radius; fewer
    // than k when tau undershoots the true k-NN distance.
    NeighborList knn_seeded(std::span<const double> q, std::size_t k, double tau) const;

    // Number of points within distance r of q (closed ball).
    std::size_t range_count(std::span<const double> q, double r,
                            std::uint32_t exclude = kNoExclude) const;

    // Nearest point satisfying accept(index); ties by ascending index.
    std::optional<Neighbor> nearest_where(
        std::span<const double> q, const std::function<bool(std::uint32_t)>& accept) const;

    std::size_t depth() const { return depth_; }
    std::size_t size() const { return n_; }
    const Dataset& data() const { return *data_; }

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::uint32_t left = 0;   // 0 = leaf (root is never a child)
        std::uint32_t right = 0;
        std::uint32_t split_dim = 0;
        double split_val = 0.0;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::size_t depth);
    double min_sqdist(std::uint32_t node, std::span<const double> q) const;
    double max_sqdist(std::uint32_t node, std::span<const double> q) const;

    const Dataset* data_;
    std::size_t n_;
    std::size_t dim_;
    std::size_t leaf_size_;
    std::size_t depth_ = 0;
    std::vector<std::uint32_t> perm_;
    std::vector<Node> nodes_;
    std::vector<double> node_lo_;  // nodes x dim
    std::vector<double> node_hi_;
};

}  // namespace pivnet
