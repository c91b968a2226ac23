// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace dgs {

// Static k-d tree over row-major points. Queries return exact neighbors,
// ordered by (squared distance, index) so results are reproducible under ties.
class KdTree {
public:
    using Hit = std::pair<double, std::size_t>;  // squared distance, index

    KdTree(std::span<const double> points, int dim);

    /// k nearest to point `query`, excluding the point itself.
    std::vector<Hit> nearest_excluding(std::size_t query, std::size_t k) const;

private:
    void build(std::size_t lo, std::size_t hi);
    void search(std::size_t lo, std::size_t hi, const double* q, std::size_t self, std::size_t k,
                std::vector<Hit>& heap) const;
    double sq_dist(const double* q, std::size_t i) const;

    std::span<const double> pts_;
    int dim_;
    std::vector<std::size_t> order_;
    std::vector<int> axis_;  // split axis of the node whose median sits at order_[mid]
};

}  // namespace dgs
