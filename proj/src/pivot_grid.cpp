#include "pivnet/pivot_grid.hpp"

#include <cmath>
#include <string>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"
#include "pivnet/kernels/kernels.hpp"
#include "pivnet/parallel.hpp"

namespace pivnet {

std::uint64_t PivotGrid::required_bytes(std::uint32_t dim, std::uint32_t cells_per_dim,
                                        std::uint32_t k_max) {
    // Overflow-safe c^d * k_max * sizeof(double).
    long double total = 1.0L;
    for (std::uint32_t j = 0; j < dim; ++j) total *= cells_per_dim;
    total *= k_max;
    total *= sizeof(double);
    if (total > 1e18L) return UINT64_MAX;
    return static_cast<std::uint64_t>(total);
}

PivotGrid PivotGrid::build(const Dataset& data, std::uint32_t cells_per_dim,
                           std::uint32_t k_max, const KdTree& tree,
                           std::uint64_t budget_bytes, std::size_t threads) {
    if (cells_per_dim < 1) throw ValidationError("build_grid: c must be >= 1");
    if (k_max < 1 || k_max > data.size()) {
        throw ValidationError("build_grid: k_max out of range (k_max=" +
                              std::to_string(k_max) + ", |X|=" +
                              std::to_string(data.size()) + ")");
    }
    const std::uint64_t need = required_bytes(
        static_cast<std::uint32_t>(data.dim()), cells_per_dim, k_max);
    if (need > budget_bytes) {
        throw BudgetError("build_grid: pivot grid requires " + std::to_string(need) +
                          " bytes, budget is " + std::to_string(budget_bytes));
    }

    PivotGrid grid;
    grid.bbox_ = data.bbox;
    grid.c_ = cells_per_dim;
    grid.k_max_ = k_max;
    grid.dim_ = static_cast<std::uint32_t>(data.dim());
    grid.total_cells_ = 1;
    for (std::uint32_t j = 0; j < grid.dim_; ++j) grid.total_cells_ *= cells_per_dim;
    grid.cell_width_.resize(grid.dim_);
    for (std::uint32_t j = 0; j < grid.dim_; ++j) {
        grid.cell_width_[j] = (grid.bbox_[j].hi - grid.bbox_[j].lo) / cells_per_dim;
    }
    grid.vectors_.resize(grid.total_cells_ * k_max);

    // Pivot vectors are independent; deterministic under any scheduling.
    parallel_for(grid.total_cells_, threads, [&](std::size_t cell) {
        const std::vector<double> loc = grid.pivot_location(cell);
        const NeighborList nn = tree.knn(loc, k_max);
        double* out = grid.vectors_.data() + cell * k_max;
        for (std::uint32_t k = 0; k < k_max; ++k) out[k] = nn[k].dist;
    });
    return grid;
}

std::uint64_t PivotGrid::locate(std::span<const double> q) const {
    if (q.size() != dim_) throw ValidationError("locate: query dimension mismatch");
    std::uint64_t cell = 0;
    for (std::uint32_t j = 0; j < dim_; ++j) {
        // Right-open intervals; the last cell is right-closed via the clamp.
        double t = cell_width_[j] > 0.0 ? (q[j] - bbox_[j].lo) / cell_width_[j] : 0.0;
        long long i = static_cast<long long>(std::floor(t));
        if (i < 0) i = 0;
        if (i >= c_) i = c_ - 1;
        cell = cell * c_ + static_cast<std::uint64_t>(i);
    }
    return cell;
}

std::vector<double> PivotGrid::pivot_location(std::uint64_t cell) const {
    std::vector<double> loc(dim_);
    for (std::uint32_t j = dim_; j-- > 0;) {
        const std::uint64_t idx = cell % c_;
        cell /= c_;
        loc[j] = bbox_[j].lo + (static_cast<double>(idx) + 0.5) * cell_width_[j];
    }
    return loc;
}

std::span<const double> PivotGrid::pivot_vector(std::uint64_t cell) const {
    return {vectors_.data() + cell * k_max_, k_max_};
}

PivotGrid::PivotRef PivotGrid::pivot(std::uint64_t cell) const {
    return {pivot_location(cell), pivot_vector(cell)};
}

double PivotGrid::pivot_distance(std::span<const double> q) const {
    const std::uint64_t cell = locate(q);
    const std::vector<double> loc = pivot_location(cell);
    return std::sqrt(kernels::active().sqdist_f64(q.data(), loc.data(), dim_));
}

double PivotGrid::pivot_bound(std::span<const double> q, std::size_t k) const {
    if (k < 1 || k > k_max_) {
        throw ValidationError("pivot_bound: k out of range (k=" + std::to_string(k) +
                              ", k_max=" + std::to_string(k_max_) + ")");
    }
    const std::uint64_t cell = locate(q);
    const std::vector<double> loc = pivot_location(cell);
    const double dqp = std::sqrt(kernels::active().sqdist_f64(q.data(), loc.data(), dim_));
    return dqp + vectors_[cell * k_max_ + (k - 1)];
}

namespace {
constexpr char kMagic[5] = "PVGR";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void PivotGrid::save(const std::filesystem::path& path) const {
    BinaryWriter w(path);
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(dim_);
    w.u32(c_);
    w.u32(k_max_);
    for (const auto& iv : bbox_) {
        w.f64(iv.lo);
        w.f64(iv.hi);
    }
    for (double v : vectors_) w.f32(static_cast<float>(v));
    w.close();
}

PivotGrid PivotGrid::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError(path.string() + ": unsupported grid version " +
                      std::to_string(version));
    }
    PivotGrid grid;
    grid.dim_ = r.u32();
    grid.c_ = r.u32();
    grid.k_max_ = r.u32();
    grid.bbox_.resize(grid.dim_);
    for (auto& iv : grid.bbox_) {
        iv.lo = r.f64();
        iv.hi = r.f64();
    }
    grid.total_cells_ = 1;
    for (std::uint32_t j = 0; j < grid.dim_; ++j) grid.total_cells_ *= grid.c_;
    grid.cell_width_.resize(grid.dim_);
    for (std::uint32_t j = 0; j < grid.dim_; ++j) {
        grid.cell_width_[j] = (grid.bbox_[j].hi - grid.bbox_[j].lo) / grid.c_;
    }
    grid.vectors_.resize(grid.total_cells_ * grid.k_max_);
    for (auto& v : grid.vectors_) v = r.f32();
    return grid;
}

}  // namespace pivnet
