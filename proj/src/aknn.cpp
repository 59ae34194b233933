#include "pivnet/aknn.hpp"

#include <algorithm>

#include "pivnet/error.hpp"

namespace pivnet {

NeighborList aknn_search(const KdTree& tree, const Estimator& est,
                         std::span<const double> q, std::size_t k) {
    if (k < 1 || k > est.k_max()) throw ValidationError("aknn_search: k exceeds k_max");
    const DistanceVector dv = est.estimate(q);
    const double tau = dv[k - 1];
    if (!(tau > 0.0)) return {};  // degenerate estimate, nothing within radius 0
    return tree.knn_seeded(q, k, tau);
}

double recall_against_exact(const NeighborList& found, const NeighborList& exact) {
    if (exact.empty()) throw ValidationError("recall: empty exact result");
    std::size_t hits = 0;
    for (const Neighbor& f : found) {
        for (const Neighbor& e : exact) {
            if (f.index == e.index) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(exact.size());
}

}  // namespace pivnet
