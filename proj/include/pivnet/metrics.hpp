#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pivnet {

// Mean absolute component difference (per-query MAE).
double mae(std::span<const double> exact, std::span<const double> est);

struct MapeResult {
    double value = 0.0;
    std::size_t excluded = 0;  // entries with exact distance 0
};

// Mean relative absolute error; zero-denominator entries are excluded and
// counted. Throws when every entry is excluded.
MapeResult mape(std::span<const double> exact, std::span<const double> est);

struct ErrorReport {
    std::vector<double> per_query_mae;
    std::vector<double> per_query_mape;
    double avg_mae = 0.0;
    double median_mae = 0.0;
    double avg_mape = 0.0;
    double median_mape = 0.0;
    std::size_t mape_excluded_entries = 0;
    // MAE over k in [1,10], [11,20], ... across all queries.
    std::vector<double> bucket_mae;
    std::size_t bucket_width = 10;
};

// exact and est are row-major (n_queries x k_max).
ErrorReport error_report(const std::vector<double>& exact, const std::vector<double>& est,
                         std::size_t n_queries, std::size_t k_max,
                         std::size_t bucket_width = 10);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
};

// Inputs need not be sorted.
PrecisionRecall precision_recall(std::span<const std::uint32_t> detected,
                                 std::span<const std::uint32_t> truth);

struct LatencyStats {
    double mean_us = 0.0;
    double median_us = 0.0;
    std::size_t iters = 0;
};

// Wall-clock per-call statistics after warmup, single-threaded.
LatencyStats bench(const std::function<void()>& probe, std::size_t warmup,
                   std::size_t iters);

// Lower-middle element for even counts.
double median(std::vector<double> values);

}  // namespace pivnet
