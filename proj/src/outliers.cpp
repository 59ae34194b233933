#include "pivnet/outliers.hpp"

#include <algorithm>
#include <numeric>

#include "pivnet/error.hpp"
#include "pivnet/parallel.hpp"

namespace pivnet {

std::vector<double> kth_nn_distances_exact(const Dataset& data, const KdTree& tree,
                                           std::size_t k, std::size_t threads) {
    if (k < 1 || k >= data.size()) {
        throw ValidationError("kth_nn_distances: k out of range");
    }
    std::vector<double> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const NeighborList nn = tree.knn(data[i], k, static_cast<std::uint32_t>(i));
        out[i] = nn.back().dist;
    });
    return out;
}

std::vector<double> kth_nn_distances_estimated(const Dataset& data, const Estimator& est,
                                               std::size_t k, std::size_t threads) {
    if (k < 1 || k > est.k_max()) {
        throw ValidationError("kth_nn_distances: k exceeds estimator k_max");
    }
    std::vector<double> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const DistanceVector dv = est.estimate(data[i]);
        out[i] = dv[k - 1];
    });
    return out;
}

std::vector<std::uint32_t> detect_outliers(const std::vector<double>& kth_dists,
                                           const DodParams& params) {
    const std::size_t n = kth_dists.size();
    std::vector<std::uint32_t> flagged;

    if (params.variant == DodVariant::RadiusCount) {
        if (!(params.r > 0.0)) throw ValidationError("detect_outliers: r must be > 0");
        for (std::size_t i = 0; i < n; ++i) {
            if (kth_dists[i] > params.r) flagged.push_back(static_cast<std::uint32_t>(i));
        }
        return flagged;
    }

    if (params.top_n < 1 || params.top_n > n) {
        throw ValidationError("detect_outliers: N out of range (N=" +
                              std::to_string(params.top_n) + ", |X|=" +
                              std::to_string(n) + ")");
    }
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (kth_dists[a] != kth_dists[b]) return kth_dists[a] > kth_dists[b];
        return a < b;
    });
    flagged.assign(order.begin(), order.begin() + params.top_n);
    std::sort(flagged.begin(), flagged.end());
    return flagged;
}

}  // namespace pivnet
