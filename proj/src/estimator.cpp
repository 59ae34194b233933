#include "pivnet/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"

namespace pivnet {

const char* kind_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Pivot: return "pivot";
        case EstimatorKind::QueryNet: return "querynet";
        case EstimatorKind::PivNet: return "pivnet";
        case EstimatorKind::PivNetItr: return "pivnet-itr";
    }
    return "?";
}

EstimatorKind kind_from_name(const std::string& name) {
    if (name == "pivot") return EstimatorKind::Pivot;
    if (name == "querynet") return EstimatorKind::QueryNet;
    if (name == "pivnet") return EstimatorKind::PivNet;
    if (name == "pivnet-itr") return EstimatorKind::PivNetItr;
    throw ValidationError("unknown estimator kind '" + name + "'");
}

std::size_t feature_width(EstimatorKind kind, std::size_t dim, std::uint32_t k_max) {
    switch (kind) {
        case EstimatorKind::QueryNet: return dim;
        case EstimatorKind::PivNet: return dim + 1 + k_max;
        case EstimatorKind::PivNetItr: return dim + 3;
        case EstimatorKind::Pivot: return 0;
    }
    return 0;
}

std::vector<double> assemble_features(EstimatorKind kind, std::span<const double> q,
                                      const PivotGrid& grid,
                                      std::optional<std::size_t> k) {
    if (q.size() != grid.dim()) {
        throw ValidationError("assemble_features: query dimension mismatch");
    }
    if (kind == EstimatorKind::PivNetItr && !k.has_value()) {
        throw ValidationError("assemble_features: PivNet-itr requires k");
    }

    std::vector<double> f;
    f.reserve(feature_width(kind, q.size(), grid.k_max()));
    f.assign(q.begin(), q.end());
    if (kind == EstimatorKind::QueryNet) return f;

    const std::uint64_t cell = grid.locate(q);
    const std::vector<double> loc = grid.pivot_location(cell);
    const double dqp = std::sqrt(kernels::active().sqdist_f64(q.data(), loc.data(), q.size()));
    const auto vp = grid.pivot_vector(cell);

    if (kind == EstimatorKind::PivNet) {
        f.push_back(dqp);
        f.insert(f.end(), vp.begin(), vp.end());
    } else {  // PivNetItr
        const std::size_t kk = *k;
        if (kk < 1 || kk > grid.k_max()) {
            throw ValidationError("assemble_features: k out of range");
        }
        f.push_back(static_cast<double>(kk));
        f.push_back(dqp);
        f.push_back(vp[kk - 1]);
    }
    return f;
}

Normalization fit_normalization(const std::vector<double>& features, std::size_t rows,
                                std::size_t cols, const std::vector<double>& targets) {
    if (rows == 0) throw ValidationError("fit_normalization: empty training matrix");
    Normalization norm;
    norm.offset.resize(cols);
    norm.scale.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double lo = features[j];
        double hi = features[j];
        for (std::size_t i = 1; i < rows; ++i) {
            lo = std::min(lo, features[i * cols + j]);
            hi = std::max(hi, features[i * cols + j]);
        }
        norm.offset[j] = lo;
        norm.scale[j] = hi > lo ? hi - lo : 1.0;
    }
    double max_target = 0.0;
    for (double t : targets) max_target = std::max(max_target, t);
    norm.target_scale = max_target > 0.0 ? max_target : 1.0;
    return norm;
}

Estimator::Estimator(EstimatorKind kind, std::uint32_t k_max, std::uint32_t dim,
                     std::shared_ptr<const PivotGrid> grid, std::optional<MlpModel> model,
                     Normalization norm)
    : kind_(kind), k_max_(k_max), dim_(dim), grid_(std::move(grid)),
      model_(std::move(model)), norm_(std::move(norm)) {
    check_complete();
}

void Estimator::check_complete() const {
    const bool needs_grid = kind_ != EstimatorKind::QueryNet;
    const bool needs_model = kind_ != EstimatorKind::Pivot;
    if (needs_grid && grid_ == nullptr) {
        throw ValidationError(std::string(kind_name(kind_)) + " estimator requires a grid");
    }
    if (needs_model && !model_.has_value()) {
        throw ValidationError(std::string(kind_name(kind_)) + " estimator requires a model");
    }
    for (double s : norm_.scale) {
        if (!(s > 0.0)) throw ValidationError("estimator: normalization scale must be > 0");
    }
}

DistanceVector Estimator::estimate(std::span<const double> q) const {
    if (q.size() != dim_) throw ValidationError("estimate: query dimension mismatch");
    DistanceVector out(k_max_);

    if (kind_ == EstimatorKind::Pivot) {
        const std::uint64_t cell = grid_->locate(q);
        const std::vector<double> loc = grid_->pivot_location(cell);
        const double dqp =
            std::sqrt(kernels::active().sqdist_f64(q.data(), loc.data(), dim_));
        const auto vp = grid_->pivot_vector(cell);
        for (std::uint32_t k = 0; k < k_max_; ++k) out[k] = dqp + vp[k];
    } else if (kind_ == EstimatorKind::PivNetItr) {
        thread_local std::vector<float> in;
        thread_local MlpWorkspace ws;
        for (std::uint32_t k = 1; k <= k_max_; ++k) {
            const std::vector<double> raw = assemble_features(kind_, q, *grid_, k);
            in.resize(raw.size());
            norm_.apply(raw, in.data());
            mlp_forward_into<float>(*model_, in, ws);
            const double v = static_cast<double>(ws.acts.back()[0]) * norm_.target_scale;
            out[k - 1] = std::max(0.0, v);
        }
    } else {
        thread_local std::vector<float> in;
        thread_local MlpWorkspace ws;
        std::vector<double> raw =
            kind_ == EstimatorKind::QueryNet
                ? std::vector<double>(q.begin(), q.end())
                : assemble_features(kind_, q, *grid_);
        in.resize(raw.size());
        norm_.apply(raw, in.data());
        mlp_forward_into<float>(*model_, in, ws);
        const auto& y = ws.acts.back();
        for (std::uint32_t k = 0; k < k_max_; ++k) {
            out[k] = std::max(0.0, static_cast<double>(y[k]) * norm_.target_scale);
        }
    }

    if (isotonic_) {
        for (std::uint32_t k = 1; k < k_max_; ++k) out[k] = std::max(out[k], out[k - 1]);
    }
    return out;
}

namespace {
constexpr char kMagic[5] = "PVES";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void Estimator::save(const std::filesystem::path& path, const std::string& grid_path,
                     std::uint64_t grid_checksum) const {
    BinaryWriter w(path);
    w.magic(kMagic);
    w.u32(kVersion);
    w.u8(static_cast<std::uint8_t>(kind_));
    w.u32(k_max_);
    w.u32(dim_);
    w.str(kind_ == EstimatorKind::QueryNet ? std::string() : grid_path);
    w.u64(kind_ == EstimatorKind::QueryNet ? 0 : grid_checksum);

    w.u32(static_cast<std::uint32_t>(norm_.offset.size()));
    w.f64_array(norm_.offset);
    w.f64_array(norm_.scale);
    w.f64(norm_.target_scale);

    if (model_.has_value()) {
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(model_->layer_sizes.size()));
        w.u32_array(model_->layer_sizes);
        for (std::size_t l = 0; l + 1 < model_->layer_sizes.size(); ++l) {
            w.f32_array(model_->weights[l]);
            w.f32_array(model_->biases[l]);
        }
    } else {
        w.u8(0);
    }
    w.close();
}

EstimatorLoadResult Estimator::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError(path.string() + ": unsupported estimator version " +
                      std::to_string(version));
    }
    EstimatorLoadResult res;
    Estimator& e = res.estimator;
    e.kind_ = static_cast<EstimatorKind>(r.u8());
    e.k_max_ = r.u32();
    e.dim_ = r.u32();
    res.grid_path = r.str();
    res.grid_checksum = r.u64();

    const std::uint32_t feat = r.u32();
    e.norm_.offset = r.f64_array(feat);
    e.norm_.scale = r.f64_array(feat);
    e.norm_.target_scale = r.f64();

    if (r.u8() == 1) {
        MlpModel m;
        const std::uint32_t layers = r.u32();
        m.layer_sizes = r.u32_array(layers);
        for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
            const std::size_t rows = m.layer_sizes[l + 1];
            const std::size_t cols = m.layer_sizes[l];
            m.weights.push_back(r.f32_array(rows * cols));
            m.biases.push_back(r.f32_array(rows));
        }
        e.model_ = std::move(m);
    }
    if (e.kind_ == EstimatorKind::QueryNet) e.check_complete();
    return res;
}

void Estimator::attach_grid(std::shared_ptr<const PivotGrid> grid) {
    grid_ = std::move(grid);
    check_complete();
}

}  // namespace pivnet
