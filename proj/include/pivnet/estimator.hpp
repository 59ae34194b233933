#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pivnet/mlp.hpp"
#include "pivnet/pivot_grid.hpp"
#include "pivnet/types.hpp"

namespace pivnet {

enum class EstimatorKind : std::uint8_t {
    Pivot = 0,     // dist(q,p) + v_p, no model
    QueryNet = 1,  // coordinates only
    PivNet = 2,    // coordinates + dist(q,p) + v_p, vector output
    PivNetItr = 3, // coordinates + k + dist(q,p) + v_p[k-1], one pass per k
};

const char* kind_name(EstimatorKind kind);
EstimatorKind kind_from_name(const std::string& name);

// Per-feature min-max scaling to [0,1] plus a single target scale.
struct Normalization {
    std::vector<double> offset;
    std::vector<double> scale;  // strictly positive
    double target_scale = 1.0;

    std::size_t feature_count() const { return offset.size(); }
    void apply(std::span<const double> raw, float* out) const {
        for (std::size_t j = 0; j < offset.size(); ++j) {
            out[j] = static_cast<float>((raw[j] - offset[j]) / scale[j]);
        }
    }
};

std::size_t feature_width(EstimatorKind kind, std::size_t dim, std::uint32_t k_max);

// Raw (un-normalized) features in the fixed layout for `kind`. k is required
// exactly when kind is PivNetItr (1-based).
std::vector<double> assemble_features(EstimatorKind kind, std::span<const double> q,
                                      const PivotGrid& grid,
                                      std::optional<std::size_t> k = std::nullopt);

// Column-wise min-max over the feature matrix; degenerate columns map to 0
// with scale 1. Targets share one scale, 1 / max target value.
Normalization fit_normalization(const std::vector<double>& features, std::size_t rows,
                                std::size_t cols, const std::vector<double>& targets);

// One of the four k-NN distance estimators behind a single estimate() call.
// Immutable after construction; estimate() is safe from multiple threads.
class Estimator {
public:
    Estimator() = default;
    Estimator(EstimatorKind kind, std::uint32_t k_max, std::uint32_t dim,
              std::shared_ptr<const PivotGrid> grid, std::optional<MlpModel> model,
              Normalization norm);

    // All k_max estimated distances in one call. Network outputs are
    // de-normalized and clamped at zero; the optional isotonic pass applies
    // a running maximum across k.
    DistanceVector estimate(std::span<const double> q) const;

    EstimatorKind kind() const { return kind_; }
    std::uint32_t k_max() const { return k_max_; }
    std::uint32_t dim() const { return dim_; }
    const PivotGrid* grid() const { return grid_.get(); }
    const MlpModel* model() const { return model_ ? &*model_ : nullptr; }
    const Normalization& normalization() const { return norm_; }

    void set_isotonic(bool on) { isotonic_ = on; }
    bool isotonic() const { return isotonic_; }

    // Estimator file: kind tag + model + norm block + grid reference
    // (path + checksum). The grid itself stays in its own file.
    void save(const std::filesystem::path& path, const std::string& grid_path,
              std::uint64_t grid_checksum) const;

    // Loads the estimator shell; attach_grid() supplies the grid after the
    // caller has validated the checksum.
    static struct EstimatorLoadResult load(const std::filesystem::path& path);
    void attach_grid(std::shared_ptr<const PivotGrid> grid);

private:
    void check_complete() const;

    EstimatorKind kind_ = EstimatorKind::Pivot;
    std::uint32_t k_max_ = 0;
    std::uint32_t dim_ = 0;
    std::shared_ptr<const PivotGrid> grid_;
    std::optional<MlpModel> model_;
    Normalization norm_;
    bool isotonic_ = false;
};

struct EstimatorLoadResult {
    Estimator estimator;
    std::string grid_path;  // empty for QueryNet
    std::uint64_t grid_checksum = 0;
};

}  // namespace pivnet
