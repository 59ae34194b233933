#include "pivnet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "pivnet/error.hpp"
#include "pivnet/io.hpp"
#include "pivnet/rng.hpp"

namespace pivnet {

Bbox compute_bbox(const Points& pts) {
    Bbox box(pts.dim);
    for (std::size_t j = 0; j < pts.dim; ++j) {
        box[j] = {pts.coords[j], pts.coords[j]};
    }
    const std::size_t n = pts.size();
    for (std::size_t i = 1; i < n; ++i) {
        auto p = pts[i];
        for (std::size_t j = 0; j < pts.dim; ++j) {
            box[j].lo = std::min(box[j].lo, p[j]);
            box[j].hi = std::max(box[j].hi, p[j]);
        }
    }
    return box;
}

namespace {

// Parses one CSV row into vals. Returns false (with `why`) on a bad cell.
bool parse_row(const std::string& line, std::vector<double>& vals, std::string& why) {
    vals.clear();
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        std::size_t end = comma == std::string::npos ? line.size() : comma;
        std::size_t a = pos;
        std::size_t b = end;
        while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
        while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t' || line[b - 1] == '\r')) --b;
        if (a == b) {
            why = "missing value";
            return false;
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, v);
        if (ec != std::errc() || ptr != line.data() + b) {
            why = "invalid number '" + line.substr(a, b - a) + "'";
            return false;
        }
        if (!std::isfinite(v)) {
            why = "non-finite value";
            return false;
        }
        vals.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return true;
}

}  // namespace

CsvLoadResult load_csv(const std::filesystem::path& path, const CsvOptions& opt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    CsvLoadResult result;
    Points& pts = result.data.points;
    std::string line;
    std::vector<double> vals;
    std::size_t row = 0;
    std::size_t expected_cols = 0;

    while (std::getline(in, line)) {
        ++row;
        if (opt.has_header && row == 1) continue;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;

        std::string why;
        bool ok = parse_row(line, vals, why);
        if (ok && expected_cols != 0 && vals.size() != expected_cols) {
            ok = false;
            why = "expected " + std::to_string(expected_cols) + " columns";
        }
        if (!ok) {
            if (opt.drop_invalid) {
                ++result.dropped_rows;
                continue;
            }
            throw IoError(path.string() + ": row " + std::to_string(row) + ": " + why);
        }
        if (expected_cols == 0) {
            expected_cols = vals.size();
            pts.dim = expected_cols;
        }
        pts.push_back(vals);
    }
    if (pts.size() == 0) throw IoError(path.string() + ": no data rows");
    result.data.bbox = compute_bbox(pts);
    return result;
}

void save_csv(const std::filesystem::path& path, const Points& pts) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    std::string line;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        line.clear();
        auto p = pts[i];
        for (std::size_t j = 0; j < pts.dim; ++j) {
            if (j != 0) line += ',';
            line += format_double(p[j]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Partition partition(const Dataset& data, std::size_t n_train, std::size_t n_test,
                    std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n_train + n_test >= n) {
        throw ValidationError("partition: n_train + n_test (" +
                              std::to_string(n_train + n_test) +
                              ") must be < dataset size (" + std::to_string(n) + ")");
    }

    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(seed);
    const std::size_t picks = n_train + n_test;
    for (std::size_t i = 0; i < picks; ++i) {
        std::size_t j = i + rng.index(n - i);
        std::swap(idx[i], idx[j]);
    }

    Partition part;
    part.train_indices.assign(idx.begin(), idx.begin() + n_train);
    part.test_indices.assign(idx.begin() + n_train, idx.begin() + picks);
    part.ref_indices.assign(idx.begin() + picks, idx.end());
    std::sort(part.ref_indices.begin(), part.ref_indices.end());

    const std::size_t d = data.dim();
    part.train_queries.dim = d;
    for (auto i : part.train_indices) part.train_queries.push_back(data[i]);
    part.test_queries.dim = d;
    for (auto i : part.test_indices) part.test_queries.push_back(data[i]);
    part.reference_set.points.dim = d;
    for (auto i : part.ref_indices) part.reference_set.points.push_back(data[i]);
    part.reference_set.bbox = compute_bbox(part.reference_set.points);
    return part;
}

Points augment_uniform(const Bbox& bbox, std::size_t count, std::uint64_t seed) {
    for (const auto& iv : bbox) {
        if (iv.lo > iv.hi) throw ValidationError("augment_uniform: inverted bbox range");
    }
    Points pts(bbox.size());
    pts.coords.reserve(count * bbox.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        for (const auto& iv : bbox) pts.coords.push_back(rng.uniform(iv.lo, iv.hi));
    }
    return pts;
}

Dataset gen_random_walk_clusters(std::size_t n_clusters, std::size_t points_per_cluster,
                                 double step_scale, std::uint64_t seed, const Bbox& box) {
    if (n_clusters == 0 || points_per_cluster == 0) {
        throw ValidationError("gen_random_walk_clusters: counts must be >= 1");
    }
    const std::size_t d = box.size();
    Dataset data;
    data.points.dim = d;
    data.points.coords.reserve(n_clusters * points_per_cluster * d);
    Rng rng(seed);
    std::vector<double> pos(d);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        for (std::size_t j = 0; j < d; ++j) pos[j] = rng.uniform(box[j].lo, box[j].hi);
        for (std::size_t i = 0; i < points_per_cluster; ++i) {
            data.points.push_back(pos);
            for (std::size_t j = 0; j < d; ++j) pos[j] += rng.gaussian(0.0, step_scale);
        }
    }
    data.bbox = compute_bbox(data.points);
    return data;
}

Dataset gen_gaussian_mixture(std::size_t n, std::size_t n_components, std::uint64_t seed,
                             const Bbox& box, double spread_lo, double spread_hi) {
    if (n == 0 || n_components == 0) {
        throw ValidationError("gen_gaussian_mixture: counts must be >= 1");
    }
    const std::size_t d = box.size();
    Rng rng(seed);

    std::vector<double> centers(n_components * d);
    std::vector<double> sigmas(n_components);
    std::vector<double> cum_weight(n_components);
    double total = 0.0;
    for (std::size_t c = 0; c < n_components; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            const double span = box[j].hi - box[j].lo;
            centers[c * d + j] = box[j].lo + span * rng.uniform(0.15, 0.85);
        }
        double span0 = box[0].hi - box[0].lo;
        sigmas[c] = span0 * rng.uniform(spread_lo, spread_hi);
        total += rng.uniform(0.5, 1.5);
        cum_weight[c] = total;
    }

    Dataset data;
    data.points.dim = d;
    data.points.coords.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform(0.0, total);
        std::size_t c = std::lower_bound(cum_weight.begin(), cum_weight.end(), u) -
                        cum_weight.begin();
        if (c >= n_components) c = n_components - 1;
        for (std::size_t j = 0; j < d; ++j) {
            data.points.coords.push_back(centers[c * d + j] + rng.gaussian(0.0, sigmas[c]));
        }
    }
    data.bbox = compute_bbox(data.points);
    return data;
}

}  // namespace pivnet
