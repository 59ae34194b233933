#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pivnet/dataset.hpp"
#include "pivnet/error.hpp"
#include "test_support.hpp"

using namespace pivnet;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("load_csv parses points and computes the bbox") {
    const auto p = write_temp("pivnet_csv_basic.csv", "0,0\n1,1\n");
    const auto res = load_csv(p);
    CHECK(res.data.size() == 2);
    CHECK(res.data.dim() == 2);
    CHECK(res.data.bbox[0].lo == 0.0);
    CHECK(res.data.bbox[0].hi == 1.0);
    CHECK(res.data.bbox[1].lo == 0.0);
    CHECK(res.data.bbox[1].hi == 1.0);
}

TEST_CASE("load_csv single 1D point") {
    const auto p = write_temp("pivnet_csv_single.csv", "3.5\n");
    const auto res = load_csv(p);
    CHECK(res.data.size() == 1);
    CHECK(res.data.dim() == 1);
    CHECK(res.data[0][0] == 3.5);
    CHECK(res.data.bbox[0].lo == 3.5);
    CHECK(res.data.bbox[0].hi == 3.5);
}

TEST_CASE("load_csv rejects inconsistent columns with the row number") {
    const auto p = write_temp("pivnet_csv_badcols.csv", "1,2\n3\n");
    CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("row 2"), IoError);
    CHECK_THROWS_WITH_AS(load_csv(p), doctest::Contains("expected 2 columns"), IoError);
}

TEST_CASE("load_csv error cases") {
    CHECK_THROWS_AS(load_csv(write_temp("pivnet_csv_empty.csv", "")), IoError);
    CHECK_THROWS_AS(load_csv(fs::temp_directory_path() / "pivnet_does_not_exist.csv"),
                    IoError);
    const auto bad = write_temp("pivnet_csv_badcell.csv", "1,2\n3,abc\n");
    CHECK_THROWS_WITH_AS(load_csv(bad), doctest::Contains("row 2"), IoError);
    const auto missing = write_temp("pivnet_csv_missing.csv", "1,2\n3,\n");
    CHECK_THROWS_AS(load_csv(missing), IoError);
}

TEST_CASE("load_csv drop_invalid keeps good rows and counts drops") {
    const auto p = write_temp("pivnet_csv_drop.csv", "1,2\n3,\n4,5\nx,6\n");
    CsvOptions opt;
    opt.drop_invalid = true;
    const auto res = load_csv(p, opt);
    CHECK(res.data.size() == 2);
    CHECK(res.dropped_rows == 2);
}

TEST_CASE("load_csv has_header skips the first row") {
    const auto p = write_temp("pivnet_csv_header.csv", "x,y\n1,2\n");
    CsvOptions opt;
    opt.has_header = true;
    const auto res = load_csv(p, opt);
    CHECK(res.data.size() == 1);
    CHECK(res.data[0][0] == 1.0);
}

TEST_CASE("load_csv accepts missing trailing newline and CRLF") {
    const auto a = load_csv(write_temp("pivnet_csv_nonl.csv", "1,2\n3,4"));
    CHECK(a.data.size() == 2);
    const auto b = load_csv(write_temp("pivnet_csv_crlf.csv", "1,2\r\n3,4\r\n"));
    CHECK(b.data.size() == 2);
    CHECK(b.data[1][1] == 4.0);
}

TEST_CASE("csv write-then-reload round-trips bit-exactly") {
    const auto data = testsup::random_dataset(200, 3, 42, -1e6, 1e6);
    const fs::path p = fs::temp_directory_path() / "pivnet_csv_roundtrip.csv";
    save_csv(p, data.points);
    const auto re = load_csv(p);
    REQUIRE(re.data.size() == data.size());
    for (std::size_t i = 0; i < data.points.coords.size(); ++i) {
        CHECK(re.data.points.coords[i] == data.points.coords[i]);
    }
}

TEST_CASE("partition sizes, disjointness, determinism") {
    const auto data = testsup::random_dataset(10, 2, 7);
    const auto part = partition(data, 2, 1, 7);
    CHECK(part.reference_set.size() == 7);
    CHECK(part.train_queries.size() == 2);
    CHECK(part.test_queries.size() == 1);

    std::set<std::uint32_t> seen;
    for (auto i : part.ref_indices) seen.insert(i);
    for (auto i : part.train_indices) seen.insert(i);
    for (auto i : part.test_indices) seen.insert(i);
    CHECK(seen.size() == 10);  // pairwise disjoint and exhaustive

    const auto again = partition(data, 2, 1, 7);
    CHECK(again.ref_indices == part.ref_indices);
    CHECK(again.train_indices == part.train_indices);
    CHECK(again.test_indices == part.test_indices);

    const auto other = partition(data, 2, 1, 8);
    CHECK(other.train_indices != part.train_indices);
}

TEST_CASE("partition rejects exhausting the dataset") {
    const auto data = testsup::random_dataset(3, 2, 1);
    CHECK_THROWS_AS(partition(data, 2, 1, 0), ValidationError);
}

TEST_CASE("augment_uniform basics") {
    const Bbox unit = {{0, 1}, {0, 1}};
    CHECK(augment_uniform(unit, 0, 5).size() == 0);

    const Bbox degenerate = {{2, 2}};
    const auto five = augment_uniform(degenerate, 5, 5);
    REQUIRE(five.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(five[i][0] == 2.0);

    CHECK_THROWS_AS(augment_uniform(Bbox{{1, 0}}, 3, 5), ValidationError);
}

TEST_CASE("augment_uniform stays inside the closed bbox") {
    const Bbox box = {{-3, 2}, {10, 11}};
    const auto pts = augment_uniform(box, 2000, 99);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(pts[i][j] >= box[j].lo);
            CHECK(pts[i][j] <= box[j].hi);
        }
    }
}

TEST_CASE("augment_uniform sample mean matches uniform moments") {
    const Bbox unit = {{0, 1}, {0, 1}};
    const auto pts = augment_uniform(unit, 10000, 1234);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        mx += pts[i][0];
        my += pts[i][1];
    }
    mx /= 10000.0;
    my /= 10000.0;
    CHECK(mx == doctest::Approx(0.5).epsilon(0.04));
    CHECK(my == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::fabs(mx - 0.5) < 0.02);
    CHECK(std::fabs(my - 0.5) < 0.02);
}

TEST_CASE("random walk generator sizes and errors") {
    const Bbox box = {{0, 100}, {0, 100}};
    const auto one = gen_random_walk_clusters(1, 1, 1.0, 3, box);
    CHECK(one.size() == 1);

    const auto big = gen_random_walk_clusters(8, 25000, 5.0, 3, box);
    CHECK(big.size() == 200000);

    CHECK_THROWS_AS(gen_random_walk_clusters(0, 5, 1.0, 3, box), ValidationError);
    CHECK_THROWS_AS(gen_random_walk_clusters(5, 0, 1.0, 3, box), ValidationError);
}

TEST_CASE("random walk clusters separate under 2-means") {
    // Far-apart starts and a tiny step keep the two walks well separated;
    // Lloyd's algorithm run in-test acts as the clustering oracle.
    const Bbox box = {{0, 1000}, {0, 1000}};
    Dataset data;
    // Retry seeds until the two start locations are far apart (the generator
    // draws them uniformly).
    for (std::uint64_t seed = 1;; ++seed) {
        data = gen_random_walk_clusters(2, 500, 0.5, seed, box);
        const double dx = data[0][0] - data[500][0];
        const double dy = data[0][1] - data[500][1];
        if (dx * dx + dy * dy > 200.0 * 200.0) break;
        REQUIRE(seed < 50);
    }

    double cx[2] = {data[0][0], data[500][0]};
    double cy[2] = {data[0][1], data[500][1]};
    std::vector<int> assign(1000, 0);
    for (int iter = 0; iter < 20; ++iter) {
        for (std::size_t i = 0; i < 1000; ++i) {
            const double d0 = (data[i][0] - cx[0]) * (data[i][0] - cx[0]) +
                              (data[i][1] - cy[0]) * (data[i][1] - cy[0]);
            const double d1 = (data[i][0] - cx[1]) * (data[i][0] - cx[1]) +
                              (data[i][1] - cy[1]) * (data[i][1] - cy[1]);
            assign[i] = d1 < d0 ? 1 : 0;
        }
        double sx[2] = {0, 0}, sy[2] = {0, 0};
        int cnt[2] = {0, 0};
        for (std::size_t i = 0; i < 1000; ++i) {
            sx[assign[i]] += data[i][0];
            sy[assign[i]] += data[i][1];
            ++cnt[assign[i]];
        }
        for (int c = 0; c < 2; ++c) {
            if (cnt[c] > 0) {
                cx[c] = sx[c] / cnt[c];
                cy[c] = sy[c] / cnt[c];
            }
        }
    }
    // Each walk should map to one k-means cluster almost entirely.
    int first_half = 0, second_half = 0;
    for (std::size_t i = 0; i < 500; ++i) first_half += assign[i];
    for (std::size_t i = 500; i < 1000; ++i) second_half += assign[i];
    const int errors = std::min(first_half + (500 - second_half),
                                (500 - first_half) + second_half);
    CHECK(errors <= 5);
}

TEST_CASE("gaussian mixture generator is deterministic per seed") {
    const Bbox box = {{0, 1}, {0, 1}};
    const auto a = gen_gaussian_mixture(500, 4, 11, box);
    const auto b = gen_gaussian_mixture(500, 4, 11, box);
    CHECK(a.points.coords == b.points.coords);
    CHECK(a.size() == 500);
}
