#include "pivnet/dpc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"
#include "pivnet/kernels/kernels.hpp"
#include "pivnet/parallel.hpp"

namespace pivnet {

namespace {

// Diameter of a 2D point set via convex hull (monotone chain) and a scan
// over hull vertex pairs.
double diameter_2d(const Dataset& data) {
    const std::size_t n = data.size();
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        const auto pa = data[a];
        const auto pb = data[b];
        if (pa[0] != pb[0]) return pa[0] < pb[0];
        return pa[1] < pb[1];
    });
    auto cross = [&](std::uint32_t o, std::uint32_t a, std::uint32_t b) {
        const auto po = data[o];
        const auto pa = data[a];
        const auto pb = data[b];
        return (pa[0] - po[0]) * (pb[1] - po[1]) - (pa[1] - po[1]) * (pb[0] - po[0]);
    };
    std::vector<std::uint32_t> hull(2 * n);
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (h >= 2 && cross(hull[h - 2], hull[h - 1], idx[i]) <= 0) --h;
        hull[h++] = idx[i];
    }
    const std::size_t lower = h + 1;
    for (std::size_t i = n; i-- > 1;) {
        while (h >= lower && cross(hull[h - 2], hull[h - 1], idx[i - 1]) <= 0) --h;
        hull[h++] = idx[i - 1];
    }
    hull.resize(h > 0 ? h - 1 : 0);
    if (hull.empty()) return 0.0;

    const auto& kern = kernels::active();
    double best = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        for (std::size_t j = i + 1; j < hull.size(); ++j) {
            best = std::max(best, kern.sqdist_f64(data[hull[i]].data(),
                                                  data[hull[j]].data(), 2));
        }
    }
    return std::sqrt(best);
}

double diameter_scan(const Dataset& data, std::size_t threads) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    // SoA transpose feeds the batched kernel.
    std::vector<double> soa(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = data[i];
        for (std::size_t j = 0; j < d; ++j) soa[j * n + i] = p[j];
    }
    const auto& kern = kernels::active();
    std::vector<double> best_per(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        thread_local std::vector<double> dists;
        dists.resize(n);
        kern.sqdist_batch_f64(data[i].data(), soa.data(), n, d, dists.data());
        double local = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) local = std::max(local, dists[j]);
        best_per[i] = local;
    });
    double best = 0.0;
    for (double v : best_per) best = std::max(best, v);
    return std::sqrt(best);
}

}  // namespace

double max_pairwise_distance(const Dataset& data, std::size_t threads) {
    if (data.size() < 2) return 0.0;
    if (data.dim() == 2) return diameter_2d(data);
    return diameter_scan(data, threads);
}

DpcResult dpc_cluster(const Dataset& data, const KdTree& tree, double d_cut,
                      std::uint32_t rho_min, double delta_min, std::size_t threads) {
    if (!(d_cut > 0.0)) throw ValidationError("dpc: d_cut must be > 0");
    if (rho_min < 1) throw ValidationError("dpc: rho_min must be >= 1");
    const std::size_t n = data.size();

    DpcResult res;
    res.rho.resize(n);
    res.delta.assign(n, 0.0);
    res.dependent.assign(n, -1);
    res.label.assign(n, kNoise);

    parallel_for(n, threads, [&](std::size_t i) {
        res.rho[i] = static_cast<std::uint32_t>(
            tree.range_count(data[i], d_cut, static_cast<std::uint32_t>(i)));
    });

    // Density order; lower index wins ties ("denser").
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (res.rho[a] != res.rho[b]) return res.rho[a] > res.rho[b];
        return a < b;
    });
    std::vector<std::uint32_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<std::uint32_t>(r);

    parallel_for(n, threads, [&](std::size_t i) {
        if (rank[i] == 0) return;  // global peak handled below
        const std::uint32_t my_rank = rank[i];
        const auto dep = tree.nearest_where(data[i], [&](std::uint32_t j) {
            return rank[j] < my_rank;
        });
        res.dependent[i] = dep->index;
        res.delta[i] = dep->dist;
    });
    const std::uint32_t peak = order[0];
    res.delta[peak] = max_pairwise_distance(data, threads);
    res.dependent[peak] = -1;

    // Centers, then label propagation in decreasing-density order.
    std::int32_t next_label = 0;
    double max_delta_non_noise = 0.0;
    for (const std::uint32_t i : order) {
        if (res.rho[i] < rho_min) {
            res.label[i] = kNoise;
            ++res.noise_count;
            continue;
        }
        max_delta_non_noise = std::max(max_delta_non_noise, res.delta[i]);
        if (res.delta[i] >= delta_min) {
            res.label[i] = next_label++;
            res.centers.push_back(i);
        } else {
            res.label[i] = res.label[static_cast<std::size_t>(res.dependent[i])];
        }
    }
    // All-noise output is a valid degenerate result; the error is reserved
    // for delta_min rejecting every actual density peak.
    if (res.centers.empty() && res.noise_count < n) {
        throw ValidationError("dpc: no centers found; delta_min too high (max observed "
                              "non-noise delta = " + format_double(max_delta_non_noise) + ")");
    }
    return res;
}

namespace {

double mth_largest(std::vector<double> values, std::size_t m) {
    if (m < 1 || m > values.size()) {
        throw ValidationError("estimate_dcut: m out of range (m=" + std::to_string(m) +
                              ", n=" + std::to_string(values.size()) + ")");
    }
    std::nth_element(values.begin(), values.begin() + (m - 1), values.end(),
                     std::greater<>());
    return values[m - 1];
}

}  // namespace

double estimate_dcut_estimated(const Estimator& est, const Dataset& data,
                               std::uint32_t rho_min, std::size_t m,
                               std::size_t threads) {
    if (rho_min < 1 || rho_min > est.k_max()) {
        throw ValidationError("estimate_dcut: rho_min exceeds k_max");
    }
    std::vector<double> values(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        values[i] = est.estimate(data[i])[rho_min - 1];
    });
    return mth_largest(std::move(values), m);
}

double estimate_dcut_exact(const Dataset& data, const KdTree& tree,
                           std::uint32_t rho_min, std::size_t m, std::size_t threads) {
    if (rho_min < 1 || rho_min >= data.size()) {
        throw ValidationError("estimate_dcut: rho_min out of range");
    }
    std::vector<double> values(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const NeighborList nn = tree.knn(data[i], rho_min, static_cast<std::uint32_t>(i));
        values[i] = nn.back().dist;
    });
    return mth_largest(std::move(values), m);
}

double adjusted_rand_index(const std::vector<std::int32_t>& a,
                           const std::vector<std::int32_t>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw ValidationError("ari: label vectors must match and be non-empty");
    }
    const double n = static_cast<double>(a.size());
    std::map<std::pair<std::int32_t, std::int32_t>, double> cont;
    std::map<std::int32_t, double> row_sum, col_sum;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cont[{a[i], b[i]}] += 1.0;
        row_sum[a[i]] += 1.0;
        col_sum[b[i]] += 1.0;
    }
    auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_cont = 0.0, sum_row = 0.0, sum_col = 0.0;
    for (const auto& [key, v] : cont) sum_cont += comb2(v);
    for (const auto& [key, v] : row_sum) sum_row += comb2(v);
    for (const auto& [key, v] : col_sum) sum_col += comb2(v);
    const double expected = sum_row * sum_col / comb2(n);
    const double max_index = (sum_row + sum_col) / 2.0;
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_cont - expected) / (max_index - expected);
}

}  // namespace pivnet
