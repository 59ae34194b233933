#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pivnet/estimator.hpp"
#include "pivnet/kdtree.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

// Volume of the unit hypersphere, pi^(d/2) / gamma(d/2 + 1).
double unit_ball_volume(std::size_t d);

// k-NN plug-in density from the first k entries of a distance vector:
//   (1 / (n V_d)) * (sum_j j^(d/2) / sum_j dist_j^d)^(d/2).
// A zero distance among the first k entries yields +infinity.
double knn_density(std::span<const double> dv, std::size_t k, std::size_t n,
                   std::size_t d);

struct DensityGrid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;    // height x width, row-major
    std::vector<std::uint8_t> bins;
    double thresholds[3] = {0, 0, 0};  // 20/60/90 percentiles of values
    Bbox bbox;
};

// Per-pixel (cell centroid) k-NN density over the data bounding box,
// distances from the exact tree. 2D data only.
DensityGrid density_grid_exact(const Dataset& data, const KdTree& tree,
                               std::size_t width, std::size_t height, std::size_t k,
                               std::size_t threads = 1);

// Same grid from an estimator's distance vectors; n is the reference size
// used in the density formula.
DensityGrid density_grid_estimated(const Estimator& est, const Bbox& bbox,
                                   std::size_t n, std::size_t width,
                                   std::size_t height, std::size_t k,
                                   std::size_t threads = 1);

// Fraction of pixels whose contour bin matches.
double bin_agreement(const DensityGrid& a, const DensityGrid& b);

}  // namespace pivnet
