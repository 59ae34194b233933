#include "pivnet/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pivnet/error.hpp"
#include "pivnet/kernels/kernels.hpp"

namespace pivnet {

namespace {

struct HeapEntry {
    double sqdist;
    std::uint32_t index;
};

// Worst candidate on top: larger distance first, larger index on ties.
struct WorseFirst {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
        return a.index < b.index;
    }
};

using BoundedHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, WorseFirst>;

bool better(const HeapEntry& a, const HeapEntry& b) {
    if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
    return a.index < b.index;
}

}  // namespace

KdTree::KdTree(const Dataset& data, std::size_t leaf_size)
    : data_(&data), n_(data.size()), dim_(data.dim()),
      leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (n_ == 0) throw ValidationError("KdTree: empty dataset");
    perm_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(2 * (n_ / leaf_size_ + 1));
    build(0, static_cast<std::uint32_t>(n_), 1);
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::size_t depth) {
    const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({begin, end, 0, 0, 0, 0.0});
    node_lo_.resize(node_lo_.size() + dim_);
    node_hi_.resize(node_hi_.size() + dim_);
    double* lo = node_lo_.data() + id * dim_;
    double* hi = node_hi_.data() + id * dim_;

    auto first = (*data_)[perm_[begin]];
    for (std::size_t j = 0; j < dim_; ++j) lo[j] = hi[j] = first[j];
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        auto p = (*data_)[perm_[i]];
        for (std::size_t j = 0; j < dim_; ++j) {
            lo[j] = std::min(lo[j], p[j]);
            hi[j] = std::max(hi[j], p[j]);
        }
    }
    depth_ = std::max(depth_, depth);

    if (end - begin <= leaf_size_) return id;

    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        const double extent = hi[j] - lo[j];
        if (extent > widest) {
            widest = extent;
            split_dim = j;
        }
    }
    if (widest <= 0.0) return id;  // all points identical, keep as one leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    const auto& ds = *data_;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&ds, split_dim](std::uint32_t a, std::uint32_t b) {
                         return ds[a][split_dim] < ds[b][split_dim];
                     });

    nodes_[id].split_dim = static_cast<std::uint32_t>(split_dim);
    nodes_[id].split_val = ds[perm_[mid]][split_dim];
    const std::uint32_t left = build(begin, mid, depth + 1);
    const std::uint32_t right = build(mid, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

double KdTree::min_sqdist(std::uint32_t node, std::span<const double> q) const {
    const double* lo = node_lo_.data() + node * dim_;
    const double* hi = node_hi_.data() + node * dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        double diff = 0.0;
        if (q[j] < lo[j]) diff = lo[j] - q[j];
        else if (q[j] > hi[j]) diff = q[j] - hi[j];
        acc += diff * diff;
    }
    return acc;
}

double KdTree::max_sqdist(std::uint32_t node, std::span<const double> q) const {
    const double* lo = node_lo_.data() + node * dim_;
    const double* hi = node_hi_.data() + node * dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        const double diff = std::max(std::fabs(q[j] - lo[j]), std::fabs(q[j] - hi[j]));
        acc += diff * diff;
    }
    return acc;
}

NeighborList KdTree::knn(std::span<const double> q, std::size_t k,
                         std::uint32_t exclude) const {
    if (q.size() != dim_) throw ValidationError("knn: query dimension mismatch");
    const std::size_t avail = n_ - (exclude != kNoExclude ? 1 : 0);
    if (k < 1 || k > avail) {
        throw ValidationError("knn: k out of range (k=" + std::to_string(k) +
                              ", |X|=" + std::to_string(avail) + ")");
    }

    const auto& kern = kernels::active();
    BoundedHeap heap;
    const auto& ds = *data_;

    // Explicit stack; nearer child visited first.
    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        // Prune only on strict excess: at equality a tied point with a lower
        // index could still belong in the result.
        if (heap.size() == k && min_sqdist(id, q) > heap.top().sqdist) continue;
        const Node& nd = nodes_[id];
        if (nd.left == 0) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const std::uint32_t idx = perm_[i];
                if (idx == exclude) continue;
                const double sq = kern.sqdist_f64(ds[idx].data(), q.data(), dim_);
                HeapEntry cand{sq, idx};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (better(cand, heap.top())) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            continue;
        }
        const bool left_first = q[nd.split_dim] <= nd.split_val;
        stack.push_back(left_first ? nd.right : nd.left);
        stack.push_back(left_first ? nd.left : nd.right);
    }

    NeighborList out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        out[i] = {heap.top().index, std::sqrt(heap.top().sqdist)};
        heap.pop();
    }
    return out;
}

NeighborList KdTree::knn_seeded(std::span<const double> q, std::size_t k, double tau) const {
    if (q.size() != dim_) throw ValidationError("knn_seeded: query dimension mismatch");
    if (!(tau > 0.0)) throw ValidationError("knn_seeded: tau must be positive");
    if (k < 1 || k > n_) throw ValidationError("knn_seeded: k out of range");

    const auto& kern = kernels::active();
    BoundedHeap heap;
    const auto& ds = *data_;

    // Radius bookkeeping stays in distance units: tau is typically produced
    // by sqrt() and squaring it would make the boundary exclusive by one ulp.
    auto radius = [&] {
        return heap.size() == k ? std::min(tau, std::sqrt(heap.top().sqdist)) : tau;
    };

    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        if (std::sqrt(min_sqdist(id, q)) > radius()) continue;
        const Node& nd = nodes_[id];
        if (nd.left == 0) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const std::uint32_t idx = perm_[i];
                const double sq = kern.sqdist_f64(ds[idx].data(), q.data(), dim_);
                if (std::sqrt(sq) > tau) continue;
                HeapEntry cand{sq, idx};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (better(cand, heap.top())) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            continue;
        }
        const bool left_first = q[nd.split_dim] <= nd.split_val;
        stack.push_back(left_first ? nd.right : nd.left);
        stack.push_back(left_first ? nd.left : nd.right);
    }

    NeighborList out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        out[i] = {heap.top().index, std::sqrt(heap.top().sqdist)};
        heap.pop();
    }
    return out;
}

std::size_t KdTree::range_count(std::span<const double> q, double r,
                                std::uint32_t exclude) const {
    if (q.size() != dim_) throw ValidationError("range_count: query dimension mismatch");
    const auto& kern = kernels::active();
    const double r_sq = r * r;
    const auto& ds = *data_;
    std::size_t count = 0;

    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        if (min_sqdist(id, q) > r_sq) continue;
        const Node& nd = nodes_[id];
        if (max_sqdist(id, q) <= r_sq) {
            count += nd.end - nd.begin;
            if (exclude != kNoExclude) {
                for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                    if (perm_[i] == exclude) {
                        --count;
                        break;
                    }
                }
            }
            continue;
        }
        if (nd.left == 0) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const std::uint32_t idx = perm_[i];
                if (idx == exclude) continue;
                if (kern.sqdist_f64(ds[idx].data(), q.data(), dim_) <= r_sq) ++count;
            }
            continue;
        }
        stack.push_back(nd.left);
        stack.push_back(nd.right);
    }
    return count;
}

std::optional<Neighbor> KdTree::nearest_where(
    std::span<const double> q, const std::function<bool(std::uint32_t)>& accept) const {
    if (q.size() != dim_) throw ValidationError("nearest_where: query dimension mismatch");
    const auto& kern = kernels::active();
    const auto& ds = *data_;
    HeapEntry best{std::numeric_limits<double>::infinity(), kNoExclude};

    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        if (min_sqdist(id, q) > best.sqdist) continue;
        const Node& nd = nodes_[id];
        if (nd.left == 0) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const std::uint32_t idx = perm_[i];
                if (!accept(idx)) continue;
                const double sq = kern.sqdist_f64(ds[idx].data(), q.data(), dim_);
                if (better({sq, idx}, best)) best = {sq, idx};
            }
            continue;
        }
        const bool left_first = q[nd.split_dim] <= nd.split_val;
        stack.push_back(left_first ? nd.right : nd.left);
        stack.push_back(left_first ? nd.left : nd.right);
    }

    if (best.index == kNoExclude) return std::nullopt;
    return Neighbor{best.index, std::sqrt(best.sqdist)};
}

}  // namespace pivnet
