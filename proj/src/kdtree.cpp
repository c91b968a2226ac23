// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace dgs {
namespace {

constexpr std::size_t kLeafSize = 8;

}  // namespace

KdTree::KdTree(std::span<const double> points, int dim)
    : pts_(points), dim_(dim), order_(points.size() / static_cast<std::size_t>(dim)), axis_(order_.size(), 0) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    build(0, order_.size());
}

double KdTree::sq_dist(const double* q, std::size_t i) const {
    double s = 0.0;
    for (int c = 0; c < dim_; ++c) {
        const double d = q[c] - pts_[i * dim_ + c];
        s += d * d;
    }
    return s;
}

void KdTree::build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeafSize) return;
    int best = 0;
    double spread = -1.0;
    for (int c = 0; c < dim_; ++c) {
        double mn = pts_[order_[lo] * dim_ + c], mx = mn;
        for (std::size_t n = lo; n < hi; ++n) {
            const double v = pts_[order_[n] * dim_ + c];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (mx - mn > spread) {
            spread = mx - mn;
            best = c;
        }
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         const double va = pts_[a * dim_ + best], vb = pts_[b * dim_ + best];
                         return va < vb || (va == vb && a < b);
                     });
    axis_[mid] = best;
    build(lo, mid);
    build(mid + 1, hi);
}

void KdTree::search(std::size_t lo, std::size_t hi, const double* q, std::size_t self, std::size_t k,
                    std::vector<Hit>& heap) const {
    auto offer = [&](std::size_t i) {
        if (i == self) return;
        const Hit h{sq_dist(q, i), i};
        if (heap.size() < k) {
            heap.push_back(h);
            std::push_heap(heap.begin(), heap.end());
        } else if (h < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = h;
            std::push_heap(heap.begin(), heap.end());
        }
    };
    if (hi - lo <= kLeafSize) {
        for (std::size_t n = lo; n < hi; ++n) offer(order_[n]);
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t pivot = order_[mid];
    const int ax = axis_[mid];
    const double diff = q[ax] - pts_[pivot * dim_ + ax];
    offer(pivot);
    const bool left_first = diff <= 0.0;
    if (left_first)
        search(lo, mid, q, self, k, heap);
    else
        search(mid + 1, hi, q, self, k, heap);
    // Equal-distance candidates across the plane must still be visited so
    // index tie-breaks stay exact.
    if (heap.size() < k || diff * diff <= heap.front().first) {
        if (left_first)
            search(mid + 1, hi, q, self, k, heap);
        else
            search(lo, mid, q, self, k, heap);
    }
}

std::vector<KdTree::Hit> KdTree::nearest_excluding(std::size_t query, std::size_t k) const {
    std::vector<Hit> heap;
    heap.reserve(k + 1);
    if (k == 0) return heap;
    search(0, order_.size(), pts_.data() + query * dim_, query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
}

}  // namespace dgs
