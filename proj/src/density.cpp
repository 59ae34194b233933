#include "pivnet/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pivnet/error.hpp"
#include "pivnet/parallel.hpp"

namespace pivnet {

double unit_ball_volume(std::size_t d) {
    if (d < 1) throw ValidationError("unit_ball_volume: d must be >= 1");
    const double half_d = static_cast<double>(d) / 2.0;
    return std::pow(M_PI, half_d) / std::tgamma(half_d + 1.0);
}

double knn_density(std::span<const double> dv, std::size_t k, std::size_t n,
                   std::size_t d) {
    if (k < 1 || k > dv.size()) throw ValidationError("knn_density: k out of range");
    const double half_d = static_cast<double>(d) / 2.0;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
        num += std::pow(static_cast<double>(j), half_d);
        const double dist = dv[j - 1];
        if (dist <= 0.0) return std::numeric_limits<double>::infinity();
        den += std::pow(dist, static_cast<double>(d));
    }
    return std::pow(num / den, half_d) / (static_cast<double>(n) * unit_ball_volume(d));
}

namespace {

void finalize_bins(DensityGrid& grid) {
    std::vector<double> sorted = grid.values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    // Nearest-rank percentile.
    auto pct = [&](double q) {
        std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        if (rank < 1) rank = 1;
        return sorted[rank - 1];
    };
    grid.thresholds[0] = pct(0.20);
    grid.thresholds[1] = pct(0.60);
    grid.thresholds[2] = pct(0.90);

    grid.bins.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = grid.values[i];
        grid.bins[i] = v >= grid.thresholds[2] ? 3
                     : v >= grid.thresholds[1] ? 2
                     : v >= grid.thresholds[0] ? 1
                                               : 0;
    }
}

DensityGrid build_grid(const Bbox& bbox, std::size_t width, std::size_t height,
                       std::size_t threads,
                       const std::function<double(std::span<const double>)>& density_at) {
    if (bbox.size() != 2) throw ValidationError("density_grid: 2D data required");
    if (width < 1 || height < 1) throw ValidationError("density_grid: empty resolution");

    DensityGrid grid;
    grid.width = width;
    grid.height = height;
    grid.bbox = bbox;
    grid.values.resize(width * height);

    const double wx = (bbox[0].hi - bbox[0].lo) / static_cast<double>(width);
    const double wy = (bbox[1].hi - bbox[1].lo) / static_cast<double>(height);
    parallel_for(width * height, threads, [&](std::size_t i) {
        const std::size_t iy = i / width;
        const std::size_t ix = i % width;
        const double q[2] = {bbox[0].lo + (static_cast<double>(ix) + 0.5) * wx,
                             bbox[1].lo + (static_cast<double>(iy) + 0.5) * wy};
        grid.values[i] = density_at(std::span<const double>(q, 2));
    });
    finalize_bins(grid);
    return grid;
}

}  // namespace

DensityGrid density_grid_exact(const Dataset& data, const KdTree& tree,
                               std::size_t width, std::size_t height, std::size_t k,
                               std::size_t threads) {
    if (data.dim() != 2) throw ValidationError("density_grid: 2D data required");
    if (k > tree.size()) throw ValidationError("density_grid: k exceeds dataset size");
    const std::size_t n = data.size();
    return build_grid(data.bbox, width, height, threads,
                      [&](std::span<const double> q) {
                          const NeighborList nn = tree.knn(q, k);
                          std::vector<double> dv(k);
                          for (std::size_t j = 0; j < k; ++j) dv[j] = nn[j].dist;
                          return knn_density(dv, k, n, 2);
                      });
}

DensityGrid density_grid_estimated(const Estimator& est, const Bbox& bbox,
                                   std::size_t n, std::size_t width,
                                   std::size_t height, std::size_t k,
                                   std::size_t threads) {
    if (est.dim() != 2) throw ValidationError("density_grid: 2D estimator required");
    if (k > est.k_max()) throw ValidationError("density_grid: k exceeds k_max");
    return build_grid(bbox, width, height, threads,
                      [&](std::span<const double> q) {
                          const DistanceVector dv = est.estimate(q);
                          return knn_density(dv, k, n, 2);
                      });
}

double bin_agreement(const DensityGrid& a, const DensityGrid& b) {
    if (a.bins.size() != b.bins.size() || a.bins.empty()) {
        throw ValidationError("bin_agreement: grid shapes differ");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.bins.size(); ++i) {
        if (a.bins[i] == b.bins[i]) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(a.bins.size());
}

}  // namespace pivnet
