#include "pivnet/pipeline.hpp"

#include <json.hpp>

#include <fstream>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"
#include "pivnet/rng.hpp"

namespace pivnet {

namespace {
constexpr char kPartMagic[5] = "PVPA";
constexpr char kTestMagic[5] = "PVTS";
constexpr std::uint32_t kVersion = 1;

void write_points(BinaryWriter& w, const Points& pts) {
    w.u32(static_cast<std::uint32_t>(pts.dim));
    w.u32(static_cast<std::uint32_t>(pts.size()));
    w.f64_array(pts.coords);
}

Points read_points(BinaryReader& r) {
    Points pts;
    pts.dim = r.u32();
    const std::uint32_t n = r.u32();
    pts.coords = r.f64_array(static_cast<std::size_t>(n) * pts.dim);
    return pts;
}
}  // namespace

void save_partition(const std::filesystem::path& path, const Partition& part) {
    BinaryWriter w(path);
    w.magic(kPartMagic);
    w.u32(kVersion);
    write_points(w, part.reference_set.points);
    write_points(w, part.train_queries);
    write_points(w, part.test_queries);
    w.u32_array(part.ref_indices);
    w.u32_array(part.train_indices);
    w.u32_array(part.test_indices);
    w.close();
}

Partition load_partition(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kPartMagic);
    if (r.u32() != kVersion) throw IoError(path.string() + ": unsupported version");
    Partition part;
    part.reference_set.points = read_points(r);
    part.train_queries = read_points(r);
    part.test_queries = read_points(r);
    part.reference_set.bbox = compute_bbox(part.reference_set.points);
    part.ref_indices = r.u32_array(part.reference_set.points.size());
    part.train_indices = r.u32_array(part.train_queries.size());
    part.test_indices = r.u32_array(part.test_queries.size());
    return part;
}

void TestSet::save(const std::filesystem::path& path) const {
    BinaryWriter w(path);
    w.magic(kTestMagic);
    w.u32(kVersion);
    w.u32(k_max);
    write_points(w, queries);
    w.f64_array(ground_truth);
    w.close();
}

TestSet TestSet::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kTestMagic);
    if (r.u32() != kVersion) throw IoError(path.string() + ": unsupported version");
    TestSet t;
    t.k_max = r.u32();
    t.queries = read_points(r);
    t.ground_truth = r.f64_array(t.queries.size() * t.k_max);
    return t;
}

PrepArtifacts run_prep(const Dataset& data, const PrepConfig& cfg) {
    PrepArtifacts art;
    art.part = partition(data, cfg.n_train, cfg.n_test, derive_seed(cfg.seed, "partition"));

    const KdTree tree(art.part.reference_set, cfg.leaf_size);
    art.grid = std::make_shared<PivotGrid>(
        PivotGrid::build(art.part.reference_set, cfg.grid_c, cfg.k_max, tree,
                         cfg.budget_bytes, cfg.threads));

    const std::size_t n_augment = cfg.n_augment == 0 ? cfg.n_train : cfg.n_augment;
    art.corpus = build_corpus(art.part, *art.grid, tree, n_augment, cfg.k_max,
                              derive_seed(cfg.seed, "corpus"), cfg.threads);

    // Test queries: the sampled held-out points plus an equal augmented half.
    art.test.k_max = cfg.k_max;
    art.test.queries = art.part.test_queries;
    const Points synth = augment_uniform(art.part.reference_set.bbox, cfg.n_test,
                                         derive_seed(cfg.seed, "test-augment"));
    art.test.queries.coords.insert(art.test.queries.coords.end(), synth.coords.begin(),
                                   synth.coords.end());
    if (art.test.queries.dim == 0) art.test.queries.dim = synth.dim;
    art.test.ground_truth =
        exact_ground_truth(art.test.queries, tree, cfg.k_max, cfg.threads);
    return art;
}

void write_prep_artifacts(const std::filesystem::path& out_dir, const PrepArtifacts& art) {
    std::filesystem::create_directories(out_dir);
    save_partition(out_dir / "partition.bin", art.part);
    art.grid->save(out_dir / "grid.bin");
    art.corpus.save(out_dir / "corpus.bin");
    art.test.save(out_dir / "testset.bin");

    nlohmann::ordered_json manifest;
    manifest["version"] = 1;
    auto& items = manifest["artifacts"];
    for (const char* name : {"partition.bin", "grid.bin", "corpus.bin", "testset.bin"}) {
        const auto path = out_dir / name;
        nlohmann::ordered_json item;
        item["file"] = name;
        item["bytes"] = std::filesystem::file_size(path);
        item["fnv1a64"] = checksum_hex(fnv1a64_file(path));
        items.push_back(item);
    }
    std::ofstream out(out_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + (out_dir / "manifest.json").string());
}

PrepDir load_prep_dir(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("missing manifest: " + manifest_path.string());
    nlohmann::json manifest;
    in >> manifest;

    for (const auto& item : manifest.at("artifacts")) {
        const auto path = dir / item.at("file").get<std::string>();
        if (!std::filesystem::exists(path)) {
            throw IoError("missing artifact: " + path.string());
        }
        const std::string expect = item.at("fnv1a64").get<std::string>();
        const std::string got = checksum_hex(fnv1a64_file(path));
        if (expect != got) {
            throw ValidationError("checksum mismatch for " + path.string() +
                                  " (manifest " + expect + ", file " + got + ")");
        }
    }

    PrepDir prep;
    prep.part = load_partition(dir / "partition.bin");
    prep.grid_file = dir / "grid.bin";
    prep.grid = std::make_shared<PivotGrid>(PivotGrid::load(prep.grid_file));
    prep.grid_checksum = fnv1a64_file(prep.grid_file);
    prep.corpus = TrainingCorpus::load(dir / "corpus.bin");
    prep.test = TestSet::load(dir / "testset.bin");
    return prep;
}

Estimator load_estimator_checked(const std::filesystem::path& est_path,
                                 const std::filesystem::path& prep_dir) {
    EstimatorLoadResult loaded = Estimator::load(est_path);
    if (!loaded.grid_path.empty()) {
        const auto grid_file = prep_dir / "grid.bin";
        if (!std::filesystem::exists(grid_file)) {
            throw IoError("missing artifact: " + grid_file.string());
        }
        const std::uint64_t sum = fnv1a64_file(grid_file);
        if (sum != loaded.grid_checksum) {
            throw ValidationError("grid checksum mismatch: estimator was trained "
                                  "against a different grid than " + grid_file.string());
        }
        loaded.estimator.attach_grid(
            std::make_shared<PivotGrid>(PivotGrid::load(grid_file)));
    }
    return std::move(loaded.estimator);
}

}  // namespace pivnet
