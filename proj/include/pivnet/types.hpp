#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pivnet {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Per-dimension (min, max) of a point set.
using Bbox = std::vector<Interval>;

// Ordered k-NN distances of one query, index j holds the (j+1)-th NN distance.
using DistanceVector = std::vector<double>;

// Flat row-major point storage. Queries and reference data share this layout.
struct Points {
    std::size_t dim = 0;
    std::vector<double> coords;  // size() * dim values

    Points() = default;
    explicit Points(std::size_t d) : dim(d) {}

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }

    std::span<const double> operator[](std::size_t i) const {
        return {coords.data() + i * dim, dim};
    }
    std::span<double> row(std::size_t i) {
        return {coords.data() + i * dim, dim};
    }

    void push_back(std::span<const double> p) {
        coords.insert(coords.end(), p.begin(), p.end());
    }
};

struct Dataset {
    Points points;
    Bbox bbox;

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return points.dim; }
    std::span<const double> operator[](std::size_t i) const { return points[i]; }
};

struct Neighbor {
    std::uint32_t index = 0;
    double dist = 0.0;
};

// Ascending by (dist, index).
using NeighborList = std::vector<Neighbor>;

Bbox compute_bbox(const Points& pts);

}  // namespace pivnet
