// pivnet: k-NN distance estimation pipeline.
//
// Subcommands: gen, prep, train, eval, bench, density, dod, aknn, dpc.
// Every run is determined by its flags and input files; each command with an
// output directory echoes its resolved configuration there, and report files
// contain no timestamps so reruns are byte-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "pivnet/aknn.hpp"
#include "pivnet/dataset.hpp"
#include "pivnet/density.hpp"
#include "pivnet/dpc.hpp"
#include "pivnet/error.hpp"
#include "pivnet/estimator.hpp"
#include "pivnet/io.hpp"
#include "pivnet/metrics.hpp"
#include "pivnet/outliers.hpp"
#include "pivnet/parallel.hpp"
#include "pivnet/pipeline.hpp"
#include "pivnet/rng.hpp"
#include "pivnet/trainer.hpp"

using namespace pivnet;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitBudget = 4;

std::size_t resolve_threads(std::size_t threads) {
    return threads == 0 ? default_threads() : threads;
}

void write_config_echo(const fs::path& dir, const std::map<std::string, std::string>& kv) {
    fs::create_directories(dir);
    std::ofstream out(dir / "config.txt");
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
    if (!out) throw IoError("write failed: " + (dir / "config.txt").string());
}

void write_json_report(const fs::path& dir, const ordered_json& j) {
    std::ofstream out(dir / "report.json");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + (dir / "report.json").string());
}

Dataset load_dataset(const std::string& path, bool has_header, bool drop_invalid) {
    CsvOptions opt;
    opt.has_header = has_header;
    opt.drop_invalid = drop_invalid;
    auto res = load_csv(path, opt);
    if (res.dropped_rows > 0) {
        std::cerr << "dropped " << res.dropped_rows << " invalid rows\n";
    }
    return std::move(res.data);
}

// Backend selection shared by eval/bench/density: a trained estimator file,
// the pivot baseline from the prep grid, or exact search.
struct Backend {
    enum class Mode { Estimator, Pivot, Exact } mode = Mode::Exact;
    std::optional<Estimator> est;

    std::string name(const std::string& est_path) const {
        switch (mode) {
            case Mode::Exact: return "exact";
            case Mode::Pivot: return "pivot";
            default: return est_path;
        }
    }
};

Backend make_backend(const std::string& est_path, bool exact, bool pivot,
                     const fs::path& prep_dir, const PrepDir& prep) {
    const int picked = (!est_path.empty() ? 1 : 0) + (exact ? 1 : 0) + (pivot ? 1 : 0);
    if (picked != 1) {
        throw ValidationError("choose exactly one of --est, --exact, --pivot");
    }
    Backend b;
    if (exact) {
        b.mode = Backend::Mode::Exact;
    } else if (pivot) {
        b.mode = Backend::Mode::Pivot;
        b.est.emplace(EstimatorKind::Pivot, prep.grid->k_max(), prep.grid->dim(),
                      prep.grid, std::nullopt, Normalization{});
    } else {
        b.mode = Backend::Mode::Estimator;
        b.est = load_estimator_checked(est_path, prep_dir);
    }
    return b;
}

// ----------------------------------------------------------------- gen

struct GenArgs {
    std::string kind = "mixture";
    std::string out;
    std::size_t n = 50000;
    std::size_t components = 10;
    std::size_t clusters = 8;
    std::size_t per_cluster = 25000;
    double step_scale = 12.0;
    double box_lo = 0.0;
    double box_hi = 1.0;
    std::size_t dim = 2;
    std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
    Bbox box(a.dim);
    for (auto& iv : box) iv = {a.box_lo, a.box_hi};
    Dataset data;
    if (a.kind == "mixture") {
        data = gen_gaussian_mixture(a.n, a.components, a.seed, box);
    } else if (a.kind == "walk") {
        data = gen_random_walk_clusters(a.clusters, a.per_cluster, a.step_scale, a.seed, box);
    } else if (a.kind == "uniform") {
        data.points = augment_uniform(box, a.n, a.seed);
        data.bbox = compute_bbox(data.points);
    } else {
        throw ValidationError("gen: unknown kind '" + a.kind + "'");
    }
    save_csv(a.out, data.points);
    std::cout << "wrote " << data.size() << " points (d=" << data.dim() << ") to "
              << a.out << "\n";
    return 0;
}

// ----------------------------------------------------------------- prep

struct PrepArgs {
    std::string data_path;
    bool has_header = false;
    bool drop_invalid = false;
    std::string out_dir;
    PrepConfig cfg;
};

int cmd_prep(const PrepArgs& a) {
    const Dataset data = load_dataset(a.data_path, a.has_header, a.drop_invalid);
    PrepConfig cfg = a.cfg;
    cfg.threads = resolve_threads(cfg.threads);
    const PrepArtifacts art = run_prep(data, cfg);
    write_prep_artifacts(a.out_dir, art);
    write_config_echo(a.out_dir, {
        {"command", "prep"},
        {"data", a.data_path},
        {"seed", std::to_string(cfg.seed)},
        {"k_max", std::to_string(cfg.k_max)},
        {"grid_c", std::to_string(cfg.grid_c)},
        {"n_train", std::to_string(cfg.n_train)},
        {"n_test", std::to_string(cfg.n_test)},
        {"n_augment", std::to_string(cfg.n_augment)},
        {"leaf_size", std::to_string(cfg.leaf_size)},
        {"budget_bytes", std::to_string(cfg.budget_bytes)},
    });
    std::cout << "prep artifacts written to " << a.out_dir << "\n"
              << "  |X| = " << art.part.reference_set.size()
              << ", corpus queries = " << art.corpus.queries.size()
              << ", test queries = " << art.test.queries.size()
              << ", pivots = " << art.grid->pivot_count() << "\n";
    return 0;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
    std::string prep_dir;
    std::string kind = "pivnet";
    std::string out_dir;
    std::vector<std::uint32_t> hidden = {128, 128, 32};
    // 0 = per-kind default from default_train_config.
    double lr = 0.0;
    std::size_t batch = 0;
    std::size_t epochs = 0;
    std::size_t patience = 0;
    std::size_t threads = 0;
    std::uint64_t seed = 1;
    bool json = false;
};

int cmd_train(const TrainArgs& a) {
    const EstimatorKind kind = kind_from_name(a.kind);
    if (kind == EstimatorKind::Pivot) {
        throw ValidationError("the pivot baseline needs no training; use --pivot in eval");
    }
    const PrepDir prep = load_prep_dir(a.prep_dir);

    EstimatorTrainConfig cfg = default_train_config(kind);
    cfg.hidden = a.hidden;
    if (a.lr > 0.0) cfg.sgd.learning_rate = a.lr;
    if (a.batch > 0) cfg.sgd.batch_size = a.batch;
    if (a.epochs > 0) cfg.sgd.max_epochs = a.epochs;
    if (a.patience > 0) cfg.sgd.patience = a.patience;
    cfg.sgd.threads = resolve_threads(a.threads);
    cfg.sgd.seed = a.seed;

    const auto trained = train_estimator(kind, prep.corpus, prep.grid, cfg);

    fs::create_directories(a.out_dir);
    const fs::path est_path = fs::path(a.out_dir) / "estimator.bin";
    trained.estimator.save(est_path, "grid.bin", prep.grid_checksum);

    {
        std::ofstream losses(fs::path(a.out_dir) / "train_report.csv");
        losses << "epoch,train_loss,val_loss\n";
        for (std::size_t e = 0; e < trained.result.train_loss.size(); ++e) {
            losses << e << "," << format_double(trained.result.train_loss[e]) << ","
                   << format_double(trained.result.val_loss[e]) << "\n";
        }
    }

    std::string hidden_str;
    for (auto h : a.hidden) hidden_str += (hidden_str.empty() ? "" : ",") + std::to_string(h);
    write_config_echo(a.out_dir, {
        {"command", "train"},
        {"prep", a.prep_dir},
        {"kind", a.kind},
        {"hidden", hidden_str},
        {"lr", format_double(cfg.sgd.learning_rate)},
        {"batch", std::to_string(a.batch)},
        {"epochs", std::to_string(a.epochs)},
        {"patience", std::to_string(a.patience)},
        {"seed", std::to_string(a.seed)},
    });

    std::cout << "trained " << a.kind << ": best validation loss "
              << format_double(trained.result.best_val_loss) << " at epoch "
              << trained.result.best_epoch << " ("
              << trained.result.train_loss.size() << " epochs run)\n"
              << "estimator written to " << est_path.string() << "\n";
    if (a.json) {
        ordered_json j;
        j["kind"] = a.kind;
        j["best_epoch"] = trained.result.best_epoch;
        j["best_val_loss"] = trained.result.best_val_loss;
        j["epochs_run"] = trained.result.train_loss.size();
        write_json_report(a.out_dir, j);
    }
    return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
    std::string prep_dir;
    std::string est_path;
    bool exact = false;
    bool pivot = false;
    bool isotonic = false;
    std::string out_dir;
    bool json = false;
    std::size_t threads = 0;
};

int cmd_eval(const EvalArgs& a) {
    const PrepDir prep = load_prep_dir(a.prep_dir);
    Backend backend = make_backend(a.est_path, a.exact, a.pivot, a.prep_dir, prep);
    if (backend.est.has_value()) backend.est->set_isotonic(a.isotonic);

    const TestSet& test = prep.test;
    const std::size_t nq = test.queries.size();
    const std::uint32_t k_max = test.k_max;

    std::vector<double> est_rows(nq * k_max);
    const std::size_t threads = resolve_threads(a.threads);
    if (backend.mode == Backend::Mode::Exact) {
        const KdTree tree(prep.part.reference_set);
        est_rows = exact_ground_truth(test.queries, tree, k_max, threads);
    } else {
        const Estimator& est = *backend.est;
        parallel_for(nq, threads, [&](std::size_t i) {
            const auto dv = est.estimate(test.queries[i]);
            std::copy(dv.begin(), dv.end(), est_rows.begin() + i * k_max);
        });
    }

    const ErrorReport rep = error_report(test.ground_truth, est_rows, nq, k_max);

    fs::create_directories(a.out_dir);
    {
        std::ofstream out(fs::path(a.out_dir) / "report.csv");
        out << "metric,value\n";
        out << "avg_mae," << format_double(rep.avg_mae) << "\n";
        out << "median_mae," << format_double(rep.median_mae) << "\n";
        out << "avg_mape," << format_double(rep.avg_mape) << "\n";
        out << "median_mape," << format_double(rep.median_mape) << "\n";
        out << "mape_excluded_entries," << rep.mape_excluded_entries << "\n";
        for (std::size_t b = 0; b < rep.bucket_mae.size(); ++b) {
            out << "bucket_mae_k" << (b * rep.bucket_width + 1) << "_"
                << std::min<std::size_t>((b + 1) * rep.bucket_width, k_max) << ","
                << format_double(rep.bucket_mae[b]) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(a.out_dir) / "per_query.csv");
        out << "query,mae,mape\n";
        for (std::size_t i = 0; i < nq; ++i) {
            out << i << "," << format_double(rep.per_query_mae[i]) << ","
                << format_double(rep.per_query_mape[i]) << "\n";
        }
    }
    write_config_echo(a.out_dir, {
        {"command", "eval"},
        {"prep", a.prep_dir},
        {"backend", backend.name(a.est_path)},
        {"isotonic", a.isotonic ? "1" : "0"},
    });

    std::cout << "          avg         median\n"
              << "  MAE     " << format_double(rep.avg_mae) << "   "
              << format_double(rep.median_mae) << "\n"
              << "  MAPE    " << format_double(rep.avg_mape) << "   "
              << format_double(rep.median_mape) << "\n"
              << "  MAE by k bucket:";
    for (double b : rep.bucket_mae) std::cout << " " << format_double(b);
    std::cout << "\n";

    if (a.json) {
        ordered_json j;
        j["avg_mae"] = rep.avg_mae;
        j["median_mae"] = rep.median_mae;
        j["avg_mape"] = rep.avg_mape;
        j["median_mape"] = rep.median_mape;
        j["bucket_mae"] = rep.bucket_mae;
        write_json_report(a.out_dir, j);
    }
    return 0;
}

// ----------------------------------------------------------------- bench

struct BenchArgs {
    std::string prep_dir;
    std::string est_path;
    bool exact = false;
    bool pivot = false;
    std::size_t warmup = 200;
    std::size_t iters = 2000;
};

int cmd_bench(const BenchArgs& a) {
    const PrepDir prep = load_prep_dir(a.prep_dir);
    const Backend backend = make_backend(a.est_path, a.exact, a.pivot, a.prep_dir, prep);
    const TestSet& test = prep.test;
    const std::size_t nq = test.queries.size();
    if (nq == 0) throw ValidationError("bench: empty test set");
    const std::uint32_t k_max = test.k_max;

    // Test queries round-robin; timing covers the full inference path.
    LatencyStats stats;
    volatile double sink = 0.0;
    if (backend.mode == Backend::Mode::Exact) {
        const KdTree tree(prep.part.reference_set);
        std::size_t i = 0;
        stats = bench(
            [&] {
                const auto nn = tree.knn(test.queries[i++ % nq], k_max);
                sink = sink + nn.back().dist;
            },
            a.warmup, a.iters);
    } else {
        const Estimator& est = *backend.est;
        std::size_t i = 0;
        stats = bench(
            [&] {
                const auto dv = est.estimate(test.queries[i++ % nq]);
                sink = sink + dv[k_max - 1];
            },
            a.warmup, a.iters);
    }
    std::cout << "backend " << backend.name(a.est_path) << ": per-query latency over "
              << stats.iters << " iterations: mean " << format_double(stats.mean_us)
              << " us, median " << format_double(stats.median_us) << " us\n";
    return 0;
}

// ----------------------------------------------------------------- density

struct DensityArgs {
    std::string prep_dir;
    std::string est_path;
    bool exact = false;
    std::size_t k = 50;
    std::size_t width = 200;
    std::size_t height = 200;
    std::string out_dir;
    bool ppm = false;
    bool json = false;
    std::size_t threads = 0;
};

void write_ppm(const fs::path& path, const DensityGrid& grid) {
    // Low to high density: red, blue, green, dark green.
    static const unsigned char palette[4][3] = {
        {220, 60, 40}, {60, 90, 220}, {70, 200, 90}, {20, 110, 40}};
    std::ofstream out(path, std::ios::binary);
    out << "P6\n" << grid.width << " " << grid.height << "\n255\n";
    for (std::size_t iy = grid.height; iy-- > 0;) {  // image origin at the top
        for (std::size_t ix = 0; ix < grid.width; ++ix) {
            const auto b = grid.bins[iy * grid.width + ix];
            out.write(reinterpret_cast<const char*>(palette[b]), 3);
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

int cmd_density(const DensityArgs& a) {
    const PrepDir prep = load_prep_dir(a.prep_dir);
    const Backend backend = make_backend(a.est_path, a.exact, false, a.prep_dir, prep);
    const std::size_t threads = resolve_threads(a.threads);

    DensityGrid grid;
    if (backend.mode == Backend::Mode::Exact) {
        const KdTree tree(prep.part.reference_set);
        grid = density_grid_exact(prep.part.reference_set, tree, a.width, a.height, a.k,
                                  threads);
    } else {
        grid = density_grid_estimated(*backend.est, prep.part.reference_set.bbox,
                                      prep.part.reference_set.size(), a.width, a.height,
                                      a.k, threads);
    }

    fs::create_directories(a.out_dir);
    {
        std::ofstream out(fs::path(a.out_dir) / "pixels.csv");
        out << "pixel_x,pixel_y,density,bin\n";
        for (std::size_t iy = 0; iy < grid.height; ++iy) {
            for (std::size_t ix = 0; ix < grid.width; ++ix) {
                const std::size_t i = iy * grid.width + ix;
                out << ix << "," << iy << "," << format_double(grid.values[i]) << ","
                    << static_cast<int>(grid.bins[i]) << "\n";
            }
        }
    }
    if (a.ppm) write_ppm(fs::path(a.out_dir) / "heatmap.ppm", grid);
    write_config_echo(a.out_dir, {
        {"command", "density"},
        {"prep", a.prep_dir},
        {"backend", backend.name(a.est_path)},
        {"k", std::to_string(a.k)},
        {"resolution", std::to_string(a.width) + "x" + std::to_string(a.height)},
    });
    std::cout << "density grid " << a.width << "x" << a.height << " written; thresholds "
              << format_double(grid.thresholds[0]) << " / "
              << format_double(grid.thresholds[1]) << " / "
              << format_double(grid.thresholds[2]) << "\n";
    if (a.json) {
        ordered_json j;
        j["width"] = grid.width;
        j["height"] = grid.height;
        j["thresholds"] = {grid.thresholds[0], grid.thresholds[1], grid.thresholds[2]};
        write_json_report(a.out_dir, j);
    }
    return 0;
}

// ----------------------------------------------------------------- dod

struct DodArgs {
    std::string prep_dir;
    std::string est_path;
    bool exact = false;
    std::size_t k = 50;
    double r = 0.0;
    std::size_t top_n = 0;
    bool compare = false;
    std::string out_dir;
    bool json = false;
    std::size_t threads = 0;
};

int cmd_dod(const DodArgs& a) {
    const PrepDir prep = load_prep_dir(a.prep_dir);
    const std::size_t threads = resolve_threads(a.threads);
    const Dataset& data = prep.part.reference_set;
    if (a.r > 0.0 && a.top_n > 0) {
        throw ValidationError("dod: choose one of --r or --top-n");
    }
    if (a.r <= 0.0 && a.top_n == 0) {
        throw ValidationError("dod: one of --r or --top-n is required");
    }

    fs::create_directories(a.out_dir);
    ordered_json j;

    if (a.compare) {
        // Exact detection is the truth; estimated detection is scored
        // against it for both problem variants.
        if (a.est_path.empty()) throw ValidationError("dod --compare requires --est");
        const Estimator est = load_estimator_checked(a.est_path, a.prep_dir);
        const KdTree tree(data);
        const auto exact_k = kth_nn_distances_exact(data, tree, a.k, threads);
        const auto est_k = kth_nn_distances_estimated(data, est, a.k, threads);

        // Derive the missing parameter so both variants flag the same truth
        // count: N from the radius run, or r as the N-th distance midpoint.
        DodParams rk;
        rk.variant = DodVariant::RadiusCount;
        rk.k = a.k;
        DodParams nk;
        nk.variant = DodVariant::TopN;
        nk.k = a.k;
        if (a.r > 0.0) {
            rk.r = a.r;
            nk.top_n = detect_outliers(exact_k, rk).size();
            if (nk.top_n == 0) {
                throw ValidationError("dod --compare: no exact outliers at r=" +
                                      format_double(a.r));
            }
        } else {
            nk.top_n = a.top_n;
            std::vector<double> sorted = exact_k;
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            const double hi = sorted[a.top_n - 1];
            const double lo = a.top_n < sorted.size() ? sorted[a.top_n] : 0.0;
            rk.r = (hi + lo) / 2.0;
        }

        std::ofstream out(fs::path(a.out_dir) / "comparison.csv");
        out << "variant,precision,recall,detected,truth\n";
        for (const auto& [name, params] :
             {std::pair<const char*, DodParams>{"rk", rk}, {"nk", nk}}) {
            const auto truth = detect_outliers(exact_k, params);
            const auto found = detect_outliers(est_k, params);
            const auto pr = precision_recall(found, truth);
            out << name << "," << format_double(pr.precision) << ","
                << format_double(pr.recall) << "," << found.size() << ","
                << truth.size() << "\n";
            std::cout << "(" << name << ")-DOD precision " << format_double(pr.precision)
                      << " recall " << format_double(pr.recall) << "\n";
            j[name] = {{"precision", pr.precision}, {"recall", pr.recall}};
        }
    } else {
        DodParams params;
        params.k = a.k;
        if (a.r > 0.0) {
            params.variant = DodVariant::RadiusCount;
            params.r = a.r;
        } else {
            params.variant = DodVariant::TopN;
            params.top_n = a.top_n;
        }
        std::vector<double> kth;
        std::string backend;
        if (a.exact) {
            const KdTree tree(data);
            kth = kth_nn_distances_exact(data, tree, a.k, threads);
            backend = "exact";
        } else {
            if (a.est_path.empty()) throw ValidationError("dod: --est or --exact required");
            const Estimator est = load_estimator_checked(a.est_path, a.prep_dir);
            kth = kth_nn_distances_estimated(data, est, a.k, threads);
            backend = a.est_path;
        }
        const auto flagged = detect_outliers(kth, params);
        std::ofstream out(fs::path(a.out_dir) / "outliers.csv");
        out << "index,kth_nn_dist\n";
        for (auto i : flagged) out << i << "," << format_double(kth[i]) << "\n";
        std::cout << flagged.size() << " outliers flagged (backend " << backend << ")\n";
        j["flagged"] = flagged.size();
        if (a.json) write_json_report(a.out_dir, j);
    }

    if (a.compare && a.json) write_json_report(a.out_dir, j);
    write_config_echo(a.out_dir, {
        {"command", "dod"},
        {"prep", a.prep_dir},
        {"k", std::to_string(a.k)},
        {"r", format_double(a.r)},
        {"top_n", std::to_string(a.top_n)},
        {"compare", a.compare ? "1" : "0"},
    });
    return 0;
}

// ----------------------------------------------------------------- aknn

struct AknnArgs {
    std::string prep_dir;
    std::string est_path;
    std::size_t k = 50;
    std::size_t n_queries = 1000;
    bool oracle = false;  // seed with the exact k-th distance instead
    std::string out_dir;
    bool json = false;
};

int cmd_aknn(const AknnArgs& a) {
    const PrepDir prep = load_prep_dir(a.prep_dir);
    const KdTree tree(prep.part.reference_set);
    std::optional<Estimator> est;
    if (!a.oracle) {
        if (a.est_path.empty()) throw ValidationError("aknn: --est or --oracle required");
        est = load_estimator_checked(a.est_path, a.prep_dir);
        if (a.k > est->k_max()) throw ValidationError("aknn: k exceeds estimator k_max");
    }

    const std::size_t nq = std::min(a.n_queries, prep.test.queries.size());
    if (nq == 0) throw ValidationError("aknn: no test queries available");

    std::vector<double> recalls(nq);
    fs::create_directories(a.out_dir);
    std::ofstream out(fs::path(a.out_dir) / "recall.csv");
    out << "query,found,recall\n";
    for (std::size_t i = 0; i < nq; ++i) {
        const auto q = prep.test.queries[i];
        const auto exact = tree.knn(q, a.k);
        const NeighborList found = a.oracle
                                       ? tree.knn_seeded(q, a.k, exact.back().dist)
                                       : aknn_search(tree, *est, q, a.k);
        recalls[i] = recall_against_exact(found, exact);
        out << i << "," << found.size() << "," << format_double(recalls[i]) << "\n";
    }
    double avg = 0.0;
    for (double r : recalls) avg += r;
    avg /= static_cast<double>(nq);
    const double med = median(recalls);

    write_config_echo(a.out_dir, {
        {"command", "aknn"},
        {"prep", a.prep_dir},
        {"k", std::to_string(a.k)},
        {"queries", std::to_string(nq)},
        {"oracle", a.oracle ? "1" : "0"},
    });
    std::cout << "aknn k=" << a.k << " over " << nq << " queries: average recall "
              << format_double(avg) << ", median recall " << format_double(med) << "\n";
    if (a.json) {
        ordered_json j;
        j["k"] = a.k;
        j["queries"] = nq;
        j["avg_recall"] = avg;
        j["median_recall"] = med;
        write_json_report(a.out_dir, j);
    }
    return 0;
}

// ----------------------------------------------------------------- dpc

struct DpcArgs {
    std::string data_path;
    bool has_header = false;
    bool drop_invalid = false;
    double d_cut = 0.0;
    std::size_t rho_min = 50;
    double delta_min = 0.0;
    bool reverse = false;
    std::string prep_dir;
    std::string est_path;
    std::size_t noise_count = 0;  // 0 = take it from the original run
    std::string out_dir;
    bool json = false;
    std::size_t threads = 0;
};

void write_dpc_outputs(const fs::path& dir, const std::string& prefix,
                       const DpcResult& res) {
    {
        std::ofstream out(dir / (prefix + "labels.csv"));
        out << "index,rho,delta,dependent,label\n";
        for (std::size_t i = 0; i < res.label.size(); ++i) {
            out << i << "," << res.rho[i] << "," << format_double(res.delta[i]) << ","
                << res.dependent[i] << "," << res.label[i] << "\n";
        }
    }
    {
        std::ofstream out(dir / (prefix + "decision_graph.csv"));
        out << "rho,delta\n";
        for (std::size_t i = 0; i < res.label.size(); ++i) {
            out << res.rho[i] << "," << format_double(res.delta[i]) << "\n";
        }
    }
}

int cmd_dpc(const DpcArgs& a) {
    if (!(a.d_cut > 0.0)) throw ValidationError("dpc: --d-cut must be > 0");
    if (!(a.delta_min > 0.0)) throw ValidationError("dpc: --delta-min must be > 0");
    const Dataset data = load_dataset(a.data_path, a.has_header, a.drop_invalid);
    const std::size_t threads = resolve_threads(a.threads);
    const KdTree tree(data);

    fs::create_directories(a.out_dir);
    const auto original =
        dpc_cluster(data, tree, a.d_cut, static_cast<std::uint32_t>(a.rho_min),
                    a.delta_min, threads);
    write_dpc_outputs(a.out_dir, "", original);
    std::cout << "dpc: " << original.centers.size() << " clusters, "
              << original.noise_count << " noise points\n";

    ordered_json j;
    j["clusters"] = original.centers.size();
    j["noise"] = original.noise_count;

    if (a.reverse) {
        if (a.prep_dir.empty() || a.est_path.empty()) {
            throw ValidationError("dpc --reverse requires --prep and --est");
        }
        const Estimator est = load_estimator_checked(a.est_path, a.prep_dir);
        const std::size_t m = a.noise_count > 0 ? a.noise_count : original.noise_count;
        if (m == 0) {
            throw ValidationError("dpc --reverse: the original run has no noise points; "
                                  "pass --noise-count");
        }
        const double d_est = estimate_dcut_estimated(
            est, data, static_cast<std::uint32_t>(a.rho_min), m, threads);
        const auto reproduced =
            dpc_cluster(data, tree, d_est, static_cast<std::uint32_t>(a.rho_min),
                        a.delta_min, threads);
        write_dpc_outputs(a.out_dir, "reproduced_", reproduced);
        const double ari = adjusted_rand_index(original.label, reproduced.label);
        std::cout << "reverse engineering: estimated d_cut " << format_double(d_est)
                  << " (true " << format_double(a.d_cut) << "), ARI "
                  << format_double(ari) << "\n";
        j["estimated_d_cut"] = d_est;
        j["true_d_cut"] = a.d_cut;
        j["ari"] = ari;
    }

    write_config_echo(a.out_dir, {
        {"command", "dpc"},
        {"data", a.data_path},
        {"d_cut", format_double(a.d_cut)},
        {"rho_min", std::to_string(a.rho_min)},
        {"delta_min", format_double(a.delta_min)},
        {"reverse", a.reverse ? "1" : "0"},
    });
    if (a.json) write_json_report(a.out_dir, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pivnet: O(1) k-NN distance estimation with a pivot-grid network"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* sc_gen = app.add_subcommand("gen", "generate a synthetic CSV dataset");
    sc_gen->add_option("--kind", gen.kind, "mixture|walk|uniform");
    sc_gen->add_option("--out", gen.out)->required();
    sc_gen->add_option("--n", gen.n);
    sc_gen->add_option("--components", gen.components);
    sc_gen->add_option("--clusters", gen.clusters);
    sc_gen->add_option("--per-cluster", gen.per_cluster);
    sc_gen->add_option("--step-scale", gen.step_scale);
    sc_gen->add_option("--box-lo", gen.box_lo);
    sc_gen->add_option("--box-hi", gen.box_hi);
    sc_gen->add_option("--dim", gen.dim);
    sc_gen->add_option("--seed", gen.seed);

    PrepArgs prep;
    auto* sc_prep = app.add_subcommand("prep", "partition, grid, ground truth, caches");
    sc_prep->add_option("--data", prep.data_path)->required();
    sc_prep->add_flag("--has-header", prep.has_header);
    sc_prep->add_flag("--drop-invalid", prep.drop_invalid);
    sc_prep->add_option("--out", prep.out_dir)->required();
    sc_prep->add_option("--seed", prep.cfg.seed);
    sc_prep->add_option("--k-max", prep.cfg.k_max);
    sc_prep->add_option("--grid-c", prep.cfg.grid_c);
    sc_prep->add_option("--n-train", prep.cfg.n_train);
    sc_prep->add_option("--n-test", prep.cfg.n_test);
    sc_prep->add_option("--n-augment", prep.cfg.n_augment);
    sc_prep->add_option("--leaf-size", prep.cfg.leaf_size);
    sc_prep->add_option("--budget-bytes", prep.cfg.budget_bytes);
    sc_prep->add_option("--threads", prep.cfg.threads);

    TrainArgs train;
    auto* sc_train = app.add_subcommand("train", "train an estimator on prep artifacts");
    sc_train->add_option("--prep", train.prep_dir)->required();
    sc_train->add_option("--kind", train.kind, "pivnet|querynet|pivnet-itr");
    sc_train->add_option("--out", train.out_dir)->required();
    sc_train->add_option("--hidden", train.hidden)->delimiter(',');
    sc_train->add_option("--lr", train.lr);
    sc_train->add_option("--batch", train.batch);
    sc_train->add_option("--epochs", train.epochs);
    sc_train->add_option("--patience", train.patience);
    sc_train->add_option("--seed", train.seed);
    sc_train->add_flag("--json", train.json);

    EvalArgs eval;
    auto* sc_eval = app.add_subcommand("eval", "MAE/MAPE report on the test set");
    sc_eval->add_option("--prep", eval.prep_dir)->required();
    sc_eval->add_option("--est", eval.est_path);
    sc_eval->add_flag("--exact", eval.exact);
    sc_eval->add_flag("--pivot", eval.pivot);
    sc_eval->add_flag("--isotonic", eval.isotonic);
    sc_eval->add_option("--out", eval.out_dir)->required();
    sc_eval->add_flag("--json", eval.json);
    sc_eval->add_option("--threads", eval.threads);

    BenchArgs bench_args;
    auto* sc_bench = app.add_subcommand("bench", "per-query latency (stdout only)");
    sc_bench->add_option("--prep", bench_args.prep_dir)->required();
    sc_bench->add_option("--est", bench_args.est_path);
    sc_bench->add_flag("--exact", bench_args.exact);
    sc_bench->add_flag("--pivot", bench_args.pivot);
    sc_bench->add_option("--warmup", bench_args.warmup);
    sc_bench->add_option("--iters", bench_args.iters);

    DensityArgs density;
    auto* sc_density = app.add_subcommand("density", "k-NN density grid (2D)");
    sc_density->add_option("--prep", density.prep_dir)->required();
    sc_density->add_option("--est", density.est_path);
    sc_density->add_flag("--exact", density.exact);
    sc_density->add_option("--k", density.k);
    sc_density->add_option("--width", density.width);
    sc_density->add_option("--height", density.height);
    sc_density->add_option("--out", density.out_dir)->required();
    sc_density->add_flag("--ppm", density.ppm);
    sc_density->add_flag("--json", density.json);
    sc_density->add_option("--threads", density.threads);

    DodArgs dod;
    auto* sc_dod = app.add_subcommand("dod", "distance-based outlier detection");
    sc_dod->add_option("--prep", dod.prep_dir)->required();
    sc_dod->add_option("--est", dod.est_path);
    sc_dod->add_flag("--exact", dod.exact);
    sc_dod->add_option("--k", dod.k);
    sc_dod->add_option("--r", dod.r);
    sc_dod->add_option("--top-n", dod.top_n);
    sc_dod->add_flag("--compare", dod.compare);
    sc_dod->add_option("--out", dod.out_dir)->required();
    sc_dod->add_flag("--json", dod.json);
    sc_dod->add_option("--threads", dod.threads);

    AknnArgs aknn;
    auto* sc_aknn = app.add_subcommand("aknn", "threshold-seeded approximate k-NN");
    sc_aknn->add_option("--prep", aknn.prep_dir)->required();
    sc_aknn->add_option("--est", aknn.est_path);
    sc_aknn->add_option("--k", aknn.k);
    sc_aknn->add_option("--queries", aknn.n_queries);
    sc_aknn->add_flag("--oracle", aknn.oracle);
    sc_aknn->add_option("--out", aknn.out_dir)->required();
    sc_aknn->add_flag("--json", aknn.json);

    DpcArgs dpc;
    auto* sc_dpc = app.add_subcommand("dpc", "density-peaks clustering");
    sc_dpc->add_option("--data", dpc.data_path)->required();
    sc_dpc->add_flag("--has-header", dpc.has_header);
    sc_dpc->add_flag("--drop-invalid", dpc.drop_invalid);
    sc_dpc->add_option("--d-cut", dpc.d_cut)->required();
    sc_dpc->add_option("--rho-min", dpc.rho_min);
    sc_dpc->add_option("--delta-min", dpc.delta_min)->required();
    sc_dpc->add_flag("--reverse", dpc.reverse);
    sc_dpc->add_option("--prep", dpc.prep_dir);
    sc_dpc->add_option("--est", dpc.est_path);
    sc_dpc->add_option("--noise-count", dpc.noise_count);
    sc_dpc->add_option("--out", dpc.out_dir)->required();
    sc_dpc->add_flag("--json", dpc.json);
    sc_dpc->add_option("--threads", dpc.threads);

    try {
        app.parse(argc, argv);
        if (sc_gen->parsed()) return cmd_gen(gen);
        if (sc_prep->parsed()) return cmd_prep(prep);
        if (sc_train->parsed()) return cmd_train(train);
        if (sc_eval->parsed()) return cmd_eval(eval);
        if (sc_bench->parsed()) return cmd_bench(bench_args);
        if (sc_density->parsed()) return cmd_density(density);
        if (sc_dod->parsed()) return cmd_dod(dod);
        if (sc_aknn->parsed()) return cmd_aknn(aknn);
        if (sc_dpc->parsed()) return cmd_dpc(dpc);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitValidation;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
