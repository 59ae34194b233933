#include "pivnet/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"
#include "pivnet/parallel.hpp"
#include "pivnet/rng.hpp"

namespace pivnet {

std::vector<double> exact_ground_truth(const Points& queries, const KdTree& tree,
                                       std::uint32_t k_max, std::size_t threads) {
    if (k_max > tree.size()) {
        throw ValidationError("ground truth: k_max exceeds reference set size");
    }
    std::vector<double> gt(queries.size() * k_max);
    parallel_for(queries.size(), threads, [&](std::size_t i) {
        const NeighborList nn = tree.knn(queries[i], k_max);
        double* row = gt.data() + i * k_max;
        for (std::uint32_t k = 0; k < k_max; ++k) row[k] = nn[k].dist;
    });
    return gt;
}

TrainingCorpus build_corpus(const Partition& part, const PivotGrid& grid,
                            const KdTree& tree, std::size_t n_augment,
                            std::uint32_t k_max, std::uint64_t seed,
                            std::size_t threads) {
    if (k_max > tree.size()) {
        throw ValidationError("build_corpus: k_max exceeds reference set size");
    }
    (void)grid;  // features are assembled lazily in features_for

    TrainingCorpus corpus;
    corpus.k_max = k_max;
    corpus.queries = part.train_queries;
    const Points synth =
        augment_uniform(part.reference_set.bbox, n_augment, derive_seed(seed, "augment"));
    corpus.queries.coords.insert(corpus.queries.coords.end(), synth.coords.begin(),
                                 synth.coords.end());
    if (corpus.queries.dim == 0) corpus.queries.dim = synth.dim;

    corpus.ground_truth = exact_ground_truth(corpus.queries, tree, k_max, threads);

    // Seeded 80/20 split.
    const std::size_t n = corpus.queries.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::mt19937_64 rng(derive_seed(seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = n - n / 5;
    corpus.train_idx.assign(order.begin(), order.begin() + n_train);
    corpus.val_idx.assign(order.begin() + n_train, order.end());
    return corpus;
}

namespace {

// Raw f64 features for every corpus query (pair-expanded for PivNet-itr).
struct RawFeatures {
    std::vector<double> x;  // rows x cols
    std::vector<double> y;  // rows x out
    std::size_t cols = 0;
    std::size_t out = 0;
};

RawFeatures raw_features(EstimatorKind kind, const TrainingCorpus& corpus,
                         const PivotGrid* grid_ptr) {
    const std::size_t d = corpus.queries.dim;
    const std::size_t nq = corpus.queries.size();
    const std::uint32_t k_max = corpus.k_max;
    RawFeatures raw;
    raw.cols = feature_width(kind, d, k_max);

    if (kind == EstimatorKind::QueryNet) {
        raw.out = k_max;
        raw.x = corpus.queries.coords;
        raw.y = corpus.ground_truth;
        return raw;
    }
    if (grid_ptr == nullptr) {
        throw ValidationError("features_for: grid required for " +
                              std::string(kind_name(kind)));
    }
    const PivotGrid& grid = *grid_ptr;

    if (kind == EstimatorKind::PivNetItr) {
        raw.out = 1;
        raw.x.reserve(nq * k_max * raw.cols);
        raw.y.reserve(nq * k_max);
        for (std::size_t i = 0; i < nq; ++i) {
            const auto truth = corpus.truth_row(i);
            for (std::uint32_t k = 1; k <= k_max; ++k) {
                const auto f = assemble_features(kind, corpus.queries[i], grid, k);
                raw.x.insert(raw.x.end(), f.begin(), f.end());
                raw.y.push_back(truth[k - 1]);
            }
        }
    } else {
        raw.out = k_max;
        raw.x.reserve(nq * raw.cols);
        raw.y = corpus.ground_truth;
        for (std::size_t i = 0; i < nq; ++i) {
            const auto f = assemble_features(kind, corpus.queries[i], grid);
            raw.x.insert(raw.x.end(), f.begin(), f.end());
        }
    }
    return raw;
}

}  // namespace

FeatureSet features_for(EstimatorKind kind, const TrainingCorpus& corpus,
                        const PivotGrid* grid) {
    if (kind == EstimatorKind::Pivot) {
        throw ValidationError("features_for: the pivot baseline is not trained");
    }
    const RawFeatures raw = raw_features(kind, corpus, grid);
    const std::size_t rows = raw.y.size() / raw.out;

    FeatureSet fs;
    fs.norm = fit_normalization(raw.x, rows, raw.cols, raw.y);

    // The corpus split indexes queries; expand to pair rows for PivNet-itr.
    const std::size_t expand = kind == EstimatorKind::PivNetItr ? corpus.k_max : 1;
    auto fill = [&](const std::vector<std::uint32_t>& idx, Matrix& mx, Matrix& my) {
        mx = Matrix(idx.size() * expand, raw.cols);
        my = Matrix(idx.size() * expand, raw.out);
        std::size_t r = 0;
        for (const std::uint32_t qi : idx) {
            for (std::size_t e = 0; e < expand; ++e, ++r) {
                const std::size_t src = qi * expand + e;
                fs.norm.apply({raw.x.data() + src * raw.cols, raw.cols}, mx.row(r).data());
                for (std::size_t o = 0; o < raw.out; ++o) {
                    my.row(r)[o] = static_cast<float>(raw.y[src * raw.out + o] /
                                                      fs.norm.target_scale);
                }
            }
        }
    };
    fill(corpus.train_idx, fs.train_x, fs.train_y);
    fill(corpus.val_idx, fs.val_x, fs.val_y);
    return fs;
}

EstimatorTrainConfig default_train_config(EstimatorKind kind) {
    EstimatorTrainConfig cfg;
    cfg.sgd.batch_size = 500;
    cfg.sgd.lr_decay = 0.5;
    cfg.sgd.lr_patience = 5;
    switch (kind) {
        case EstimatorKind::PivNet:
            cfg.sgd.learning_rate = 0.2;
            cfg.sgd.max_epochs = 1200;
            cfg.sgd.patience = 100;
            break;
        case EstimatorKind::QueryNet:
            cfg.sgd.learning_rate = 0.1;
            cfg.sgd.max_epochs = 400;
            cfg.sgd.patience = 40;
            break;
        case EstimatorKind::PivNetItr:
            cfg.sgd.learning_rate = 0.05;
            cfg.sgd.max_epochs = 40;
            cfg.sgd.patience = 8;
            break;
        default:
            break;
    }
    return cfg;
}

TrainedEstimator train_estimator(EstimatorKind kind, const TrainingCorpus& corpus,
                                 std::shared_ptr<const PivotGrid> grid,
                                 const EstimatorTrainConfig& cfg) {
    if (kind == EstimatorKind::Pivot) {
        throw ValidationError("train_estimator: the pivot baseline is not trained");
    }
    if (kind != EstimatorKind::QueryNet && grid == nullptr) {
        throw ValidationError("train_estimator: grid required for " +
                              std::string(kind_name(kind)));
    }

    FeatureSet fs = features_for(kind, corpus, grid.get());

    std::vector<std::uint32_t> sizes;
    sizes.push_back(static_cast<std::uint32_t>(fs.train_x.cols));
    for (auto h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(static_cast<std::uint32_t>(fs.train_y.cols));

    MlpModel model = mlp_init(sizes, derive_seed(cfg.sgd.seed, "init"));
    TrainConfig sgd = cfg.sgd;
    sgd.seed = derive_seed(cfg.sgd.seed, "shuffle");
    TrainResult result = mlp_train(model, fs.train_x, fs.train_y, fs.val_x, fs.val_y, sgd);

    const std::uint32_t dim = static_cast<std::uint32_t>(corpus.queries.dim);
    std::shared_ptr<const PivotGrid> grid_ref =
        kind == EstimatorKind::QueryNet ? nullptr : std::move(grid);
    return {Estimator(kind, corpus.k_max, dim, std::move(grid_ref), std::move(model),
                      std::move(fs.norm)),
            std::move(result)};
}

namespace {
constexpr char kMagic[5] = "PVCO";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void TrainingCorpus::save(const std::filesystem::path& path) const {
    BinaryWriter w(path);
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(queries.dim));
    w.u32(static_cast<std::uint32_t>(queries.size()));
    w.u32(k_max);
    w.f64_array(queries.coords);
    w.f64_array(ground_truth);
    w.u32(static_cast<std::uint32_t>(train_idx.size()));
    w.u32_array(train_idx);
    w.u32(static_cast<std::uint32_t>(val_idx.size()));
    w.u32_array(val_idx);
    w.close();
}

TrainingCorpus TrainingCorpus::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError(path.string() + ": unsupported corpus version " +
                      std::to_string(version));
    }
    TrainingCorpus corpus;
    corpus.queries.dim = r.u32();
    const std::uint32_t n = r.u32();
    corpus.k_max = r.u32();
    corpus.queries.coords = r.f64_array(static_cast<std::size_t>(n) * corpus.queries.dim);
    corpus.ground_truth = r.f64_array(static_cast<std::size_t>(n) * corpus.k_max);
    corpus.train_idx = r.u32_array(r.u32());
    corpus.val_idx = r.u32_array(r.u32());
    return corpus;
}

}  // namespace pivnet
