#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pivnet/kdtree.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

// Uniform grid over the reference bounding box with a pivot at every cell
// centroid. Each pivot stores the exact distances to its k_max nearest
// reference points, so a query's nearest pivot and its distance vector are
// available in O(1). Immutable after build; concurrent reads are safe.
class PivotGrid {
public:
    struct PivotRef {
        std::vector<double> location;
        std::span<const double> knn_distances;
    };

    static constexpr std::uint64_t kDefaultBudgetBytes = 4ULL << 30;

    PivotGrid() = default;

    static PivotGrid build(const Dataset& data, std::uint32_t cells_per_dim,
                           std::uint32_t k_max, const KdTree& tree,
                           std::uint64_t budget_bytes = kDefaultBudgetBytes,
                           std::size_t threads = 1);

    // Cell of the query via per-dimension floor arithmetic; out-of-box
    // queries clamp to the boundary cell. No data-dependent loops.
    std::uint64_t locate(std::span<const double> q) const;

    std::vector<double> pivot_location(std::uint64_t cell) const;
    std::span<const double> pivot_vector(std::uint64_t cell) const;
    PivotRef pivot(std::uint64_t cell) const;

    // Triangle-inequality estimate dist(q, p) + dist(p, x_p^k); an upper
    // bound on the true k-NN distance for queries outside the reference set.
    double pivot_bound(std::span<const double> q, std::size_t k) const;

    // dist(q, pivot of q's cell); shares the locate arithmetic.
    double pivot_distance(std::span<const double> q) const;

    std::uint32_t cells_per_dim() const { return c_; }
    std::uint32_t k_max() const { return k_max_; }
    std::uint32_t dim() const { return dim_; }
    std::uint64_t pivot_count() const { return total_cells_; }
    const Bbox& bbox() const { return bbox_; }

    void save(const std::filesystem::path& path) const;
    static PivotGrid load(const std::filesystem::path& path);

    static std::uint64_t required_bytes(std::uint32_t dim, std::uint32_t cells_per_dim,
                                        std::uint32_t k_max);

private:
    Bbox bbox_;
    std::uint32_t c_ = 0;
    std::uint32_t k_max_ = 0;
    std::uint32_t dim_ = 0;
    std::uint64_t total_cells_ = 0;
    std::vector<double> cell_width_;
    std::vector<double> vectors_;  // total_cells x k_max, row-major over cells
};

}  // namespace pivnet
