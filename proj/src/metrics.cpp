#include "pivnet/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pivnet/error.hpp"

namespace pivnet {

double mae(std::span<const double> exact, std::span<const double> est) {
    if (exact.size() != est.size()) throw ValidationError("mae: length mismatch");
    if (exact.empty()) throw ValidationError("mae: empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) acc += std::fabs(exact[i] - est[i]);
    return acc / static_cast<double>(exact.size());
}

MapeResult mape(std::span<const double> exact, std::span<const double> est) {
    if (exact.size() != est.size()) throw ValidationError("mape: length mismatch");
    MapeResult r;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        if (exact[i] > 0.0) {
            acc += std::fabs(exact[i] - est[i]) / exact[i];
            ++used;
        } else {
            ++r.excluded;
        }
    }
    if (used == 0) throw ValidationError("mape: all exact entries are zero");
    r.value = acc / static_cast<double>(used);
    return r;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median: empty input");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

ErrorReport error_report(const std::vector<double>& exact, const std::vector<double>& est,
                         std::size_t n_queries, std::size_t k_max,
                         std::size_t bucket_width) {
    if (n_queries == 0) throw ValidationError("error_report: empty query set");
    if (exact.size() != n_queries * k_max || est.size() != exact.size()) {
        throw ValidationError("error_report: matrix shape mismatch");
    }
    ErrorReport rep;
    rep.bucket_width = bucket_width;
    rep.per_query_mae.reserve(n_queries);
    rep.per_query_mape.reserve(n_queries);

    const std::size_t n_buckets = (k_max + bucket_width - 1) / bucket_width;
    std::vector<double> bucket_acc(n_buckets, 0.0);
    std::vector<std::size_t> bucket_n(n_buckets, 0);

    for (std::size_t i = 0; i < n_queries; ++i) {
        std::span<const double> ex(exact.data() + i * k_max, k_max);
        std::span<const double> es(est.data() + i * k_max, k_max);
        rep.per_query_mae.push_back(mae(ex, es));
        const MapeResult m = mape(ex, es);
        rep.per_query_mape.push_back(m.value);
        rep.mape_excluded_entries += m.excluded;
        for (std::size_t k = 0; k < k_max; ++k) {
            const std::size_t b = k / bucket_width;
            bucket_acc[b] += std::fabs(ex[k] - es[k]);
            ++bucket_n[b];
        }
    }

    double s = 0.0;
    for (double v : rep.per_query_mae) s += v;
    rep.avg_mae = s / static_cast<double>(n_queries);
    s = 0.0;
    for (double v : rep.per_query_mape) s += v;
    rep.avg_mape = s / static_cast<double>(n_queries);
    rep.median_mae = median(rep.per_query_mae);
    rep.median_mape = median(rep.per_query_mape);

    rep.bucket_mae.resize(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        rep.bucket_mae[b] = bucket_acc[b] / static_cast<double>(bucket_n[b]);
    }
    return rep;
}

PrecisionRecall precision_recall(std::span<const std::uint32_t> detected,
                                 std::span<const std::uint32_t> truth) {
    std::vector<std::uint32_t> a(detected.begin(), detected.end());
    std::vector<std::uint32_t> b(truth.begin(), truth.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint32_t> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(inter));
    const double tp = static_cast<double>(inter.size());

    PrecisionRecall pr;
    if (a.empty()) {
        pr.precision_undefined = true;
        pr.precision = b.empty() ? 1.0 : 0.0;
    } else {
        pr.precision = tp / static_cast<double>(a.size());
    }
    if (b.empty()) {
        pr.recall_undefined = true;
        pr.recall = 1.0;
    } else {
        pr.recall = tp / static_cast<double>(b.size());
    }
    return pr;
}

LatencyStats bench(const std::function<void()>& probe, std::size_t warmup,
                   std::size_t iters) {
    if (iters < 1) throw ValidationError("bench: iters must be >= 1");
    for (std::size_t i = 0; i < warmup; ++i) probe();

    using clock = std::chrono::steady_clock;
    std::vector<double> us(iters);
    for (std::size_t i = 0; i < iters; ++i) {
        const auto t0 = clock::now();
        probe();
        const auto t1 = clock::now();
        us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    LatencyStats stats;
    stats.iters = iters;
    double s = 0.0;
    for (double v : us) s += v;
    stats.mean_us = s / static_cast<double>(iters);
    stats.median_us = median(us);
    return stats;
}

}  // namespace pivnet
